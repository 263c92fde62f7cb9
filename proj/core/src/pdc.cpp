#include "icf/pdc.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "icf/json_io.hpp"

namespace icf::pdc {

bool ConsentRule::matches(const Declaration& decl) const {
    if (data_type != decl.data_type) return false;
    if (!controller_id.empty() && controller_id != decl.policy.controller_id) return false;
    if (controller_category && *controller_category != decl.policy.controller_category)
        return false;
    if (!purposes.empty()) {
        bool overlap = std::any_of(purposes.begin(), purposes.end(), [&](Purpose p) {
            return decl.policy.purposes.contains(p);
        });
        if (!overlap) return false;
    }
    return true;
}

bool ConsentRule::expired(uint64_t now_ms) const {
    return duration == DurationKind::Until && now_ms >= until_ms;
}

DecisionDetail decide_detail(const std::vector<ConsentRule>& rules, const Declaration& decl,
                             uint64_t now_ms) {
    for (size_t i = 0; i < rules.size(); ++i) {
        const ConsentRule& r = rules[i];
        if (r.polarity != Polarity::Negative || r.expired(now_ms)) continue;
        if (r.matches(decl)) return {RefuseDecision{}, i};
    }
    for (size_t i = 0; i < rules.size(); ++i) {
        const ConsentRule& r = rules[i];
        if (r.polarity != Polarity::Positive || r.expired(now_ms)) continue;
        if (!r.matches(decl)) continue;
        if (r.bound && implies(decl.policy, *r.bound))
            return {ConsentDecision{instantiate(r, decl)}, i};
    }
    return {PromptDecision{}, std::nullopt};
}

Decision decide(const std::vector<ConsentRule>& rules, const Declaration& decl,
                uint64_t now_ms) {
    return decide_detail(rules, decl, now_ms).decision;
}

Policy instantiate(const ConsentRule& rule, const Declaration& decl) {
    Policy p = rule.bound.value();
    p.controller_id = decl.policy.controller_id;
    p.controller_category = decl.policy.controller_category;
    return p;
}

PromptOutcome handle_prompt(const Declaration& decl, PromptAnswer answer) {
    switch (answer) {
        case PromptAnswer::AcceptOnce:
            // a one-shot rule, consumed on the spot
            return {ConsentDecision{decl.policy}, {}};
        case PromptAnswer::RefuseOnce:
            return {RefuseDecision{}, {}};
        case PromptAnswer::AcceptAlways: {
            ConsentRule rule;
            rule.polarity = Polarity::Positive;
            rule.data_type = decl.data_type;
            rule.controller_id = decl.policy.controller_id;
            rule.purposes = decl.policy.purposes;
            rule.bound = decl.policy;
            rule.duration = DurationKind::Permanent;
            return {ConsentDecision{decl.policy}, {rule}};
        }
        case PromptAnswer::RefuseAlways: {
            ConsentRule rule;
            rule.polarity = Polarity::Negative;
            rule.data_type = decl.data_type;
            rule.controller_id = decl.policy.controller_id;
            rule.purposes = decl.policy.purposes;
            rule.duration = DurationKind::Permanent;
            return {RefuseDecision{}, {rule}};
        }
    }
    return {PromptDecision{}, {}};
}

namespace {

nlohmann::json rule_to_json(const ConsentRule& r) {
    nlohmann::json j;
    j["polarity"] = r.polarity == Polarity::Positive ? "POSITIVE" : "NEGATIVE";
    j["data_type"] = data_type_name(r.data_type);
    j["controller_category"] =
        r.controller_category ? nlohmann::json(category_name(*r.controller_category))
                              : nlohmann::json(nullptr);
    j["controller_id"] = r.controller_id;
    auto purposes = nlohmann::json::array();
    for (Purpose p : r.purposes) purposes.push_back(purpose_name(p));
    j["purposes"] = purposes;
    j["bound"] = maybe_policy_to_json(r.bound);
    switch (r.duration) {
        case DurationKind::Permanent: j["duration"] = "PERMANENT"; break;
        case DurationKind::Once: j["duration"] = "ONCE"; break;
        case DurationKind::Until: j["duration"] = "UNTIL"; j["until_ms"] = r.until_ms; break;
    }
    return j;
}

ConsentRule rule_from_json(const nlohmann::json& j) {
    ConsentRule r;
    std::string pol = j.at("polarity");
    if (pol == "POSITIVE") {
        r.polarity = Polarity::Positive;
    } else if (pol == "NEGATIVE") {
        r.polarity = Polarity::Negative;
    } else {
        throw std::invalid_argument("bad polarity: " + pol);
    }
    r.data_type = data_type_from_name(j.at("data_type"));
    if (j.contains("controller_category") && !j.at("controller_category").is_null())
        r.controller_category = category_from_name(j.at("controller_category"));
    r.controller_id = j.value("controller_id", std::string{});
    if (j.contains("purposes")) {
        for (const auto& p : j.at("purposes")) r.purposes.insert(purpose_from_name(p));
    }
    r.bound = maybe_policy_from_json(j.value("bound", nlohmann::json(nullptr)));
    if (r.polarity == Polarity::Negative && r.bound)
        throw std::invalid_argument("negative rules carry no bound");
    std::string dur = j.value("duration", "PERMANENT");
    if (dur == "PERMANENT") {
        r.duration = DurationKind::Permanent;
    } else if (dur == "ONCE") {
        r.duration = DurationKind::Once;
    } else if (dur == "UNTIL") {
        r.duration = DurationKind::Until;
        r.until_ms = j.at("until_ms").get<uint64_t>();
    } else {
        throw std::invalid_argument("bad duration: " + dur);
    }
    return r;
}

}  // namespace

std::string rules_to_json(const std::vector<ConsentRule>& rules) {
    auto arr = nlohmann::json::array();
    for (const ConsentRule& r : rules) arr.push_back(rule_to_json(r));
    return arr.dump(2);
}

std::vector<ConsentRule> rules_from_json(const std::string& text) {
    std::vector<ConsentRule> rules;
    for (const auto& j : nlohmann::json::parse(text)) rules.push_back(rule_from_json(j));
    return rules;
}

std::vector<ConsentRule> rules_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read rule file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return rules_from_json(buf.str());
}

void rules_to_file(const std::vector<ConsentRule>& rules, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write rule file: " + path);
    out << rules_to_json(rules) << "\n";
}

Custodian::Custodian(std::vector<ConsentRule> rules, SubjectId gateway)
    : rules_(std::move(rules)), gateway_(std::move(gateway)) {}

void Custodian::configure_identifier(DataType t, Bytes value) {
    vault_[t] = std::move(value);
}

std::optional<SubjectId> Custodian::identifier_for(DataType t) const {
    auto it = vault_.find(t);
    if (it == vault_.end()) return std::nullopt;
    return SubjectId{t, it->second};
}

Decision Custodian::consider(const Declaration& decl, uint64_t now_ms) {
    DecisionDetail d = decide_detail(rules_, decl, now_ms);
    if (d.rule_index && rules_[*d.rule_index].duration == DurationKind::Once) {
        rules_.erase(rules_.begin() + static_cast<ptrdiff_t>(*d.rule_index));
    }
    return d.decision;
}

Decision Custodian::answer_prompt(const Declaration& decl, PromptAnswer answer) {
    PromptOutcome out = handle_prompt(decl, answer);
    for (ConsentRule& r : out.appended_rules) rules_.push_back(std::move(r));
    return out.decision;
}

EmitOutcome Custodian::emit_consent(const ConsentDecision& decision, const Declaration& decl,
                                    const SystemState& st, ConsentTransport& transport,
                                    uint64_t now_ms) {
    // informed-consent guard: never disclose to a device we were not told about
    if (!st.knows.contains(KnowsKey{gateway_, decl.device_id}))
        return {false, "device not known to gateway", std::nullopt};
    auto subject = identifier_for(decl.data_type);
    if (!subject)
        throw MissingIdentifierError("no identifier configured for " +
                                     data_type_name(decl.data_type));
    std::string error;
    if (!transport.send(decl, *subject, decision.policy, now_ms, error))
        return {false, error, std::nullopt};
    DefineOp define{*subject, decl.data_type, decision.policy, std::nullopt};
    return {true, {}, define};
}

WithdrawOps Custodian::withdraw(const SystemState& st, const DeviceId& device,
                                DataType t) const {
    auto subject = identifier_for(t);
    SubjectId source = subject ? *subject : gateway_;
    // the consented policy lives on the source identifier; the gateway
    // store is a fallback for self-identifying subjects
    MaybePolicy bound = st.store_s_pair({source, t}).policy;
    if (!bound) bound = st.store_s_pair({gateway_, t}).policy;
    if (!bound) throw std::runtime_error("no stored bound to withdraw from");
    Policy zero = *bound;
    zero.retention_seconds = 0;
    // require binds the op policy to the requester's store and the op
    // value to the source's store, so pin both before issuing it
    DefineOp define{gateway_, t, zero, std::nullopt};
    RequireOp require{gateway_, source, device, t, zero,
                      st.store_s_pair({source, t}).value};
    return {define, require};
}

}  // namespace icf::pdc
