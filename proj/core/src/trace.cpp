#include "icf/trace.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "icf/json_io.hpp"

namespace icf {

namespace {

nlohmann::json op_params(const Operation& op) {
    nlohmann::json p;
    std::visit(
        [&](const auto& o) {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, InstallOp> || std::is_same_v<T, DeclareOp>) {
                p["device_id"] = device_id_to_hex(o.device);
                p["x_cm"] = o.position.x_cm;
                p["y_cm"] = o.position.y_cm;
                p["range_dm"] = o.range.r_dm;
                p["data_type"] = data_type_name(o.data_type);
                p["policy"] = o.policy;
            } else if constexpr (std::is_same_v<T, CollectOp>) {
                p["device_id"] = device_id_to_hex(o.device);
                p["subject"] = o.subject;
                p["data_type"] = data_type_name(o.data_type);
                p["policy"] = maybe_policy_to_json(o.policy);
                p["value"] = maybe_value_to_json(o.value);
            } else if constexpr (std::is_same_v<T, MoveOp>) {
                p["subject"] = o.subject;
                p["x_cm"] = o.position.x_cm;
                p["y_cm"] = o.position.y_cm;
            } else if constexpr (std::is_same_v<T, DefineOp>) {
                p["subject"] = o.subject;
                p["data_type"] = data_type_name(o.data_type);
                p["policy"] = maybe_policy_to_json(o.policy);
                p["value"] = maybe_value_to_json(o.value);
            } else if constexpr (std::is_same_v<T, PairOp>) {
                p["subject"] = o.subject;
                p["host"] = o.host;
            } else if constexpr (std::is_same_v<T, RequireOp>) {
                p["requester"] = o.requester;
                p["data_source"] = o.data_source;
                p["device_id"] = device_id_to_hex(o.device);
                p["data_type"] = data_type_name(o.data_type);
                p["policy"] = maybe_policy_to_json(o.policy);
                p["value"] = maybe_value_to_json(o.value);
            }
        },
        op);
    return p;
}

Position pos_from(const nlohmann::json& p) {
    return {p.at("x_cm").get<int32_t>(), p.at("y_cm").get<int32_t>()};
}

Operation op_from_json(const std::string& tag, const nlohmann::json& p) {
    if (tag == "install" || tag == "declare") {
        DeviceId dev = device_id_from_hex(p.at("device_id"));
        Position pos = pos_from(p);
        Range rng{p.at("range_dm").get<uint16_t>()};
        DataType dt = data_type_from_name(p.at("data_type"));
        Policy pol = p.at("policy").get<Policy>();
        if (tag == "install") return InstallOp{dev, pos, rng, dt, pol};
        return DeclareOp{dev, pos, rng, dt, pol};
    }
    if (tag == "collect") {
        return CollectOp{device_id_from_hex(p.at("device_id")),
                         p.at("subject").get<SubjectId>(),
                         data_type_from_name(p.at("data_type")),
                         maybe_policy_from_json(p.at("policy")),
                         maybe_value_from_json(p.at("value"))};
    }
    if (tag == "move") return MoveOp{p.at("subject").get<SubjectId>(), pos_from(p)};
    if (tag == "define") {
        return DefineOp{p.at("subject").get<SubjectId>(),
                        data_type_from_name(p.at("data_type")),
                        maybe_policy_from_json(p.at("policy")),
                        maybe_value_from_json(p.at("value"))};
    }
    if (tag == "pair")
        return PairOp{p.at("subject").get<SubjectId>(), p.at("host").get<SubjectId>()};
    if (tag == "require") {
        return RequireOp{p.at("requester").get<SubjectId>(),
                         p.at("data_source").get<SubjectId>(),
                         device_id_from_hex(p.at("device_id")),
                         data_type_from_name(p.at("data_type")),
                         maybe_policy_from_json(p.at("policy")),
                         maybe_value_from_json(p.at("value"))};
    }
    throw ReplayError("unknown operation tag: " + tag);
}

}  // namespace

std::string trace_step_tag(const TraceStep& step) {
    if (const auto* op = std::get_if<Operation>(&step)) return operation_tag(*op);
    if (std::holds_alternative<PurgeStep>(step)) return "purge";
    if (std::holds_alternative<SetStoreCMutation>(step)) return "set_store_c";
    return "erase_knows";
}

std::string trace_to_jsonl(const Trace& trace) {
    std::ostringstream out;
    for (const TraceEntry& e : trace) {
        nlohmann::json j;
        j["t"] = e.timestamp_ms;
        j["op"] = trace_step_tag(e.step);
        if (const auto* op = std::get_if<Operation>(&e.step)) {
            j["params"] = op_params(*op);
        } else if (const auto* m = std::get_if<SetStoreCMutation>(&e.step)) {
            j["params"] = {{"device_id", device_id_to_hex(m->key.device)},
                           {"subject", m->key.subject},
                           {"data_type", data_type_name(m->key.data_type)},
                           {"policy", maybe_policy_to_json(m->policy)},
                           {"value", maybe_value_to_json(m->value)},
                           {"collected_at_ms", m->collected_at_ms}};
        } else if (const auto* m = std::get_if<EraseKnowsMutation>(&e.step)) {
            j["params"] = {{"subject", m->key.subject},
                           {"device_id", device_id_to_hex(m->key.device)}};
        }
        j["outcome"] = e.outcome.applied ? "applied" : "rejected";
        if (!e.outcome.applied) j["reason"] = e.outcome.reason;
        out << j.dump() << "\n";
    }
    return out.str();
}

Trace trace_from_jsonl(const std::string& text) {
    Trace trace;
    std::istringstream in(text);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ReplayError("bad trace line " + std::to_string(lineno) + ": " + e.what());
        }
        TraceEntry entry;
        try {
            entry.timestamp_ms = j.at("t").get<uint64_t>();
            std::string tag = j.at("op");
            if (tag == "purge") {
                entry.step = PurgeStep{};
                entry.outcome.applied = true;
                if (!trace.empty() && entry.timestamp_ms < trace.back().timestamp_ms)
                    throw ReplayError("timestamps not monotone at line " +
                                      std::to_string(lineno));
                trace.push_back(std::move(entry));
                continue;
            }
            const nlohmann::json& p = j.at("params");
            if (tag == "set_store_c") {
                entry.step = SetStoreCMutation{
                    StoreCKey{device_id_from_hex(p.at("device_id")),
                              p.at("subject").get<SubjectId>(),
                              data_type_from_name(p.at("data_type"))},
                    maybe_policy_from_json(p.at("policy")),
                    maybe_value_from_json(p.at("value")),
                    p.at("collected_at_ms").get<uint64_t>()};
            } else if (tag == "erase_knows") {
                entry.step = EraseKnowsMutation{KnowsKey{
                    p.at("subject").get<SubjectId>(), device_id_from_hex(p.at("device_id"))}};
            } else {
                entry.step = op_from_json(tag, p);
            }
            std::string outcome = j.at("outcome");
            entry.outcome.applied = outcome == "applied";
            if (!entry.outcome.applied) entry.outcome.reason = j.value("reason", "");
        } catch (const nlohmann::json::exception& e) {
            throw ReplayError("bad trace line " + std::to_string(lineno) + ": " + e.what());
        } catch (const std::invalid_argument& e) {
            throw ReplayError("bad trace line " + std::to_string(lineno) + ": " + e.what());
        }
        if (!trace.empty() && entry.timestamp_ms < trace.back().timestamp_ms)
            throw ReplayError("timestamps not monotone at line " + std::to_string(lineno));
        trace.push_back(std::move(entry));
    }
    return trace;
}

void write_trace_file(const Trace& trace, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write trace file: " + path);
    out << trace_to_jsonl(trace);
}

Trace read_trace_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ReplayError("cannot read trace file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return trace_from_jsonl(buf.str());
}

std::vector<PropertyViolation> verify_trace(const Trace& trace) {
    std::vector<PropertyViolation> violations;
    SystemState state;
    // Last DS policy that reached the controller for each stored entry,
    // carried by applied collect and require operations.
    std::map<StoreCKey, Policy> last_communicated;
    std::set<StoreCKey> p4_violating;  // report P4 on entry into violation only

    for (size_t i = 0; i < trace.size(); ++i) {
        const TraceEntry& entry = trace[i];

        if (const auto* op = std::get_if<Operation>(&entry.step)) {
            ApplyResult result;
            try {
                result = apply(state, *op, entry.timestamp_ms);
            } catch (const MalformedOperationError& e) {
                throw ReplayError("malformed operation at entry " + std::to_string(i) +
                                  ": " + e.what());
            }
            if (result.outcome.applied != entry.outcome.applied)
                throw ReplayError("recorded outcome diverges from replay at entry " +
                                  std::to_string(i));

            if (result.outcome.applied) {
                if (const auto* c = std::get_if<CollectOp>(op)) {
                    StoreCKey key{c->device, c->subject, c->data_type};
                    // P1: the subject was informed of the declared device
                    auto know = state.knows.find(KnowsKey{c->subject, c->device});
                    auto decl = state.declared.find(c->device);
                    if (know == state.knows.end() || decl == state.declared.end() ||
                        !(know->second == decl->second)) {
                        violations.push_back(
                            {1, i, "collect without matching declaration knowledge"});
                    }
                    if (c->policy) last_communicated[key] = *c->policy;
                    // P2: stored policy is the last one communicated
                    StoredPair stored = result.state.store_c_pair(key);
                    if (stored.value) {
                        auto lc = last_communicated.find(key);
                        if (!stored.policy || lc == last_communicated.end() ||
                            !(*stored.policy == lc->second)) {
                            violations.push_back(
                                {2, i, "stored policy is not the last communicated one"});
                        }
                    }
                } else if (const auto* r = std::get_if<RequireOp>(op)) {
                    StoreCKey key{r->device, r->data_source, r->data_type};
                    if (r->policy) last_communicated[key] = *r->policy;
                    // P3: stored policy equals the last one received
                    StoredPair stored = result.state.store_c_pair(key);
                    auto lc = last_communicated.find(key);
                    MaybePolicy expect;
                    if (lc != last_communicated.end()) expect = lc->second;
                    if (stored.policy != expect) {
                        violations.push_back(
                            {3, i, "required policy is not the last received one"});
                    }
                }
            }
            state = std::move(result.state);
        } else if (std::holds_alternative<PurgeStep>(entry.step)) {
            state = purge_expired(state, entry.timestamp_ms);
        } else if (const auto* m = std::get_if<SetStoreCMutation>(&entry.step)) {
            state.store_c[m->key] = ControllerEntry{m->policy, m->value, m->collected_at_ms};
        } else if (const auto* m = std::get_if<EraseKnowsMutation>(&entry.step)) {
            state.knows.erase(m->key);
        }

        // P4: every stored value is covered by the installed policy.
        // A retention-zero policy marks data awaiting the next purge sweep
        // (the withdrawal mechanism), which is compliant by construction.
        for (const auto& [key, e] : state.store_c) {
            bool bad = false;
            if (e.value && !(e.policy && e.policy->retention_seconds == 0)) {
                auto cfg = state.config.find(key.device);
                bad = !e.policy || cfg == state.config.end() ||
                      !implies(cfg->second.policy, *e.policy);
            }
            if (bad && !p4_violating.contains(key)) {
                p4_violating.insert(key);
                violations.push_back({4, i, "stored value without a met DS policy"});
            } else if (!bad) {
                p4_violating.erase(key);
            }
        }
    }
    return violations;
}

}  // namespace icf
