#include "icf/semantics.hpp"

#include <algorithm>

namespace icf {

namespace {

void validate_subject(const SubjectId& s) {
    if (s.value.empty() || s.value.size() > 32)
        throw MalformedOperationError("subject identifier must be 1..32 octets");
}

void validate_value(const MaybeValue& v) {
    if (v && v->size() > 256) throw MalformedOperationError("data value exceeds 256 octets");
}

void validate_policy_fields(const Policy& p) {
    if (p.controller_id.size() > 32)
        throw MalformedOperationError("controller_id exceeds 32 octets");
}

// Keys present in exactly one map, or mapped to different values.
template <typename M>
std::vector<typename M::key_type> changed_keys(const M& a, const M& b) {
    std::vector<typename M::key_type> out;
    for (const auto& [k, v] : a) {
        auto it = b.find(k);
        if (it == b.end() || !(it->second == v)) out.push_back(k);
    }
    for (const auto& [k, v] : b) {
        if (!a.contains(k)) out.push_back(k);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

template <typename M>
bool only_changed(const M& a, const M& b,
                  const std::vector<typename M::key_type>& allowed) {
    for (const auto& k : changed_keys(a, b)) {
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) return false;
    }
    return true;
}

}  // namespace

std::string operation_tag(const Operation& op) {
    struct Visitor {
        std::string operator()(const InstallOp&) const { return "install"; }
        std::string operator()(const DeclareOp&) const { return "declare"; }
        std::string operator()(const CollectOp&) const { return "collect"; }
        std::string operator()(const MoveOp&) const { return "move"; }
        std::string operator()(const DefineOp&) const { return "define"; }
        std::string operator()(const PairOp&) const { return "pair"; }
        std::string operator()(const RequireOp&) const { return "require"; }
    };
    return std::visit(Visitor{}, op);
}

namespace {

struct ApplyVisitor {
    const SystemState& st;
    uint64_t now_ms;
    SystemState out;  // starts as a copy of st

    Outcome operator()(const InstallOp& op) {
        validate_policy_fields(op.policy);
        DeviceInfo tuple{op.position, op.range, op.data_type, op.policy};
        auto it = st.declared.find(op.device);
        if (it == st.declared.end()) return Outcome::rejected("not declared");
        if (!(it->second == tuple)) return Outcome::rejected("declaration mismatch");
        out.config[op.device] = tuple;
        return Outcome::ok();
    }

    Outcome operator()(const DeclareOp& op) {
        validate_policy_fields(op.policy);
        DeviceInfo tuple{op.position, op.range, op.data_type, op.policy};
        out.declared[op.device] = tuple;
        for (const auto& [sid, pos] : st.position) {
            if (within(pos, op.position, op.range)) {
                out.knows[KnowsKey{sid, op.device}] = tuple;
            }
        }
        return Outcome::ok();
    }

    Outcome operator()(const CollectOp& op) {
        validate_subject(op.subject);
        validate_value(op.value);
        auto cfg = st.config.find(op.device);
        if (cfg == st.config.end()) return Outcome::rejected("device not installed");
        if (cfg->second.data_type != op.data_type)
            return Outcome::rejected("data type mismatch");
        auto pos = st.position.find(op.subject);
        if (pos == st.position.end()) return Outcome::rejected("subject not positioned");
        if (!within(pos->second, cfg->second.position, cfg->second.range))
            return Outcome::rejected("subject out of range");
        StoredPair subject_store = st.store_s_pair({op.subject, op.data_type});
        if (!(subject_store == StoredPair{op.policy, op.value}))
            return Outcome::rejected("subject store mismatch");
        StoreCKey key{op.device, op.subject, op.data_type};
        MaybePolicy prior = st.store_c_pair(key).policy;
        MaybePolicy effective = override_with(op.policy, prior);
        if (!effective) return Outcome::rejected("no policy available");
        ControllerEntry& entry = out.store_c[key];
        if (implies(cfg->second.policy, *effective)) {
            entry = {effective, op.value, now_ms};
        } else {
            entry = {std::nullopt, std::nullopt, now_ms};
        }
        return Outcome::ok();
    }

    Outcome operator()(const MoveOp& op) {
        validate_subject(op.subject);
        out.position[op.subject] = op.position;
        for (const auto& [dev, tuple] : st.declared) {
            if (within(op.position, tuple.position, tuple.range)) {
                out.knows[KnowsKey{op.subject, dev}] = tuple;
            }
        }
        return Outcome::ok();
    }

    Outcome operator()(const DefineOp& op) {
        validate_subject(op.subject);
        validate_value(op.value);
        if (op.policy) validate_policy_fields(*op.policy);
        StoreSKey key{op.subject, op.data_type};
        StoredPair prior = st.store_s_pair(key);
        StoredPair next{override_with(op.policy, prior.policy),
                        override_with(op.value, prior.value)};
        // store_s keeps no explicit (undefined, undefined) entries
        if (!next.policy && !next.value) {
            out.store_s.erase(key);
        } else {
            out.store_s[key] = next;
        }
        return Outcome::ok();
    }

    Outcome operator()(const PairOp& op) {
        validate_subject(op.subject);
        validate_subject(op.host);
        if (op.subject == op.host) {
            out.paired.erase(op.subject);  // identity pairing is the default
        } else {
            out.paired[op.subject] = op.host;
        }
        return Outcome::ok();
    }

    Outcome operator()(const RequireOp& op) {
        validate_subject(op.requester);
        validate_subject(op.data_source);
        validate_value(op.value);
        auto cfg = st.config.find(op.device);
        if (cfg == st.config.end()) return Outcome::rejected("device not installed");
        if (cfg->second.data_type != op.data_type)
            return Outcome::rejected("data type mismatch");
        StoreCKey key{op.device, op.data_source, op.data_type};
        auto entry = st.store_c.find(key);
        if (entry == st.store_c.end())
            return Outcome::rejected("nothing stored for subject");
        auto pos = st.position.find(op.requester);
        if (pos == st.position.end()) return Outcome::rejected("requester not positioned");
        if (!within(pos->second, cfg->second.position, cfg->second.range))
            return Outcome::rejected("requester out of range");
        if (st.store_s_pair({op.requester, op.data_type}).policy != op.policy)
            return Outcome::rejected("requester policy mismatch");
        if (st.store_s_pair({op.data_source, op.data_type}).value != op.value)
            return Outcome::rejected("source value mismatch");
        if (st.paired_of(op.data_source) != op.requester)
            return Outcome::rejected("not paired");
        ControllerEntry& e = out.store_c[key];
        e.policy = override_with(op.policy, entry->second.policy);
        e.value = override_with(op.value, entry->second.value);
        // collected_at_ms keeps the collection timestamp
        return Outcome::ok();
    }
};

}  // namespace

ApplyResult apply(const SystemState& st, const Operation& op, uint64_t now_ms) {
    ApplyVisitor v{st, now_ms, st};
    Outcome outcome = std::visit(v, op);
    if (!outcome.applied) return {st, outcome};
    return {std::move(v.out), outcome};
}

namespace {

// Postcondition predicates, written against the contracts directly.
struct PostVisitor {
    const SystemState& before;
    const SystemState& after;
    uint64_t now_ms;

    bool frame(const std::vector<DeviceId>& config_keys,
               const std::vector<DeviceId>& declared_keys,
               const std::vector<KnowsKey>& knows_keys,
               const std::vector<SubjectId>& position_keys,
               const std::vector<SubjectId>& paired_keys,
               const std::vector<StoreCKey>& store_c_keys,
               const std::vector<StoreSKey>& store_s_keys) const {
        return only_changed(before.config, after.config, config_keys) &&
               only_changed(before.declared, after.declared, declared_keys) &&
               only_changed(before.knows, after.knows, knows_keys) &&
               only_changed(before.position, after.position, position_keys) &&
               only_changed(before.paired, after.paired, paired_keys) &&
               only_changed(before.store_c, after.store_c, store_c_keys) &&
               only_changed(before.store_s, after.store_s, store_s_keys);
    }

    bool operator()(const InstallOp& op) const {
        DeviceInfo tuple{op.position, op.range, op.data_type, op.policy};
        auto it = after.config.find(op.device);
        if (it == after.config.end() || !(it->second == tuple)) return false;
        return frame({op.device}, {}, {}, {}, {}, {}, {});
    }

    bool operator()(const DeclareOp& op) const {
        DeviceInfo tuple{op.position, op.range, op.data_type, op.policy};
        auto it = after.declared.find(op.device);
        if (it == after.declared.end() || !(it->second == tuple)) return false;
        std::vector<KnowsKey> informed;
        for (const auto& [sid, pos] : before.position) {
            if (within(pos, op.position, op.range)) {
                KnowsKey k{sid, op.device};
                auto ki = after.knows.find(k);
                if (ki == after.knows.end() || !(ki->second == tuple)) return false;
                informed.push_back(k);
            }
        }
        return frame({}, {op.device}, informed, {}, {}, {}, {});
    }

    bool operator()(const CollectOp& op) const {
        auto cfg = before.config.find(op.device);
        if (cfg == before.config.end()) return false;
        StoreCKey key{op.device, op.subject, op.data_type};
        MaybePolicy effective =
            override_with(op.policy, before.store_c_pair(key).policy);
        if (!effective) return false;
        auto it = after.store_c.find(key);
        if (it == after.store_c.end()) return false;
        if (it->second.collected_at_ms != now_ms) return false;
        if (implies(cfg->second.policy, *effective)) {
            if (!(it->second.pair() == StoredPair{effective, op.value})) return false;
        } else {
            if (!(it->second.pair() == StoredPair{})) return false;
        }
        return frame({}, {}, {}, {}, {}, {key}, {});
    }

    bool operator()(const MoveOp& op) const {
        auto it = after.position.find(op.subject);
        if (it == after.position.end() || !(it->second == op.position)) return false;
        std::vector<KnowsKey> informed;
        for (const auto& [dev, tuple] : before.declared) {
            if (within(op.position, tuple.position, tuple.range)) {
                KnowsKey k{op.subject, dev};
                auto ki = after.knows.find(k);
                if (ki == after.knows.end() || !(ki->second == tuple)) return false;
                informed.push_back(k);
            }
        }
        return frame({}, {}, informed, {op.subject}, {}, {}, {});
    }

    bool operator()(const DefineOp& op) const {
        StoreSKey key{op.subject, op.data_type};
        StoredPair prior = before.store_s_pair(key);
        StoredPair expected{override_with(op.policy, prior.policy),
                            override_with(op.value, prior.value)};
        if (!(after.store_s_pair(key) == expected)) return false;
        return frame({}, {}, {}, {}, {}, {}, {key});
    }

    bool operator()(const PairOp& op) const {
        if (after.paired_of(op.subject) != op.host) return false;
        return frame({}, {}, {}, {}, {op.subject}, {}, {});
    }

    bool operator()(const RequireOp& op) const {
        StoreCKey key{op.device, op.data_source, op.data_type};
        auto prior = before.store_c.find(key);
        if (prior == before.store_c.end()) return false;
        auto it = after.store_c.find(key);
        if (it == after.store_c.end()) return false;
        StoredPair expected{override_with(op.policy, prior->second.policy),
                            override_with(op.value, prior->second.value)};
        if (!(it->second.pair() == expected)) return false;
        if (it->second.collected_at_ms != prior->second.collected_at_ms) return false;
        return frame({}, {}, {}, {}, {}, {key}, {});
    }
};

}  // namespace

bool check_postcondition(const SystemState& before, const Operation& op,
                         const SystemState& after, uint64_t now_ms) {
    return std::visit(PostVisitor{before, after, now_ms}, op);
}

SystemState purge_expired(const SystemState& st, uint64_t now_ms) {
    SystemState out = st;
    for (auto& [key, entry] : out.store_c) {
        if (!entry.policy) continue;
        uint64_t retention_ms = uint64_t(entry.policy->retention_seconds) * 1000;
        if (now_ms >= entry.collected_at_ms &&
            now_ms - entry.collected_at_ms >= retention_ms) {
            entry.policy.reset();
            entry.value.reset();
        }
    }
    return out;
}

}  // namespace icf
