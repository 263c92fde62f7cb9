#include "icf/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <memory>
#include <random>
#include <set>
#include <sstream>

#include "icf/beacon.hpp"
#include "icf/json_io.hpp"
#include "icf/registry.hpp"

namespace icf::scenario {

std::string transport_name(Transport t) {
    return t == Transport::Beacon ? "beacon" : "registry";
}

Transport transport_from_name(const std::string& name) {
    if (name == "beacon") return Transport::Beacon;
    if (name == "registry") return Transport::Registry;
    throw ScriptError("unknown transport: " + name);
}

namespace {

Bytes value_from_json(const nlohmann::json& j) {
    if (j.contains("value_hex")) return from_hex(j.at("value_hex"));
    std::string text = j.at("value_text");
    return Bytes(text.begin(), text.end());
}

pdc::PromptAnswer answer_from_name(const std::string& s) {
    if (s == "ACCEPT_ONCE") return pdc::PromptAnswer::AcceptOnce;
    if (s == "ACCEPT_ALWAYS") return pdc::PromptAnswer::AcceptAlways;
    if (s == "REFUSE_ONCE") return pdc::PromptAnswer::RefuseOnce;
    if (s == "REFUSE_ALWAYS") return pdc::PromptAnswer::RefuseAlways;
    throw ScriptError("unknown prompt answer: " + s);
}

}  // namespace

ScenarioScript script_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ScriptError(std::string("bad scenario JSON: ") + e.what());
    }
    try {
        ScenarioScript s;
        s.name = j.value("name", std::string{"scenario"});
        s.kind = j.value("kind", std::string{"anpr"});
        s.transport = transport_from_name(j.value("transport", "beacon"));
        s.seed = j.value("seed", uint64_t{0});
        s.duration_ms = j.at("duration_ms").get<uint64_t>();
        s.beacon_interval_ms = j.value("beacon_interval_ms", uint64_t{250});
        s.poll_period_ms = j.value("poll_period_ms", uint64_t{2000});
        s.lookahead_m = j.value("lookahead_m", 0.0);
        s.range_margin_m = j.value("range_margin_m", 0.0);
        for (const auto& d : j.at("devices")) {
            DeviceScript ds;
            ds.id = device_id_from_hex(d.at("id"));
            ds.position = Position::from_meters(d.at("x").get<double>(),
                                                d.at("y").get<double>());
            ds.range = Range::from_meters(d.at("range").get<double>());
            ds.data_type = data_type_from_name(d.at("data_type"));
            ds.policy = d.at("policy").get<Policy>();
            if (d.contains("sense_times_ms")) {
                for (const auto& t : d.at("sense_times_ms"))
                    ds.sense_times_ms.push_back(t.get<uint64_t>());
            } else if (d.contains("sense_period_ms")) {
                uint64_t period = d.at("sense_period_ms").get<uint64_t>();
                uint64_t start = d.value("sense_start_ms", period);
                if (period == 0) throw ScriptError("sense_period_ms must be positive");
                for (uint64_t t = start; t <= s.duration_ms; t += period)
                    ds.sense_times_ms.push_back(t);
            }
            s.devices.push_back(std::move(ds));
        }
        for (const auto& sub : j.at("subjects")) {
            SubjectScript ss;
            ss.name = sub.at("name");
            ss.gateway.kind = data_type_from_name(sub.at("gateway").at("kind"));
            ss.gateway.value = value_from_json(sub.at("gateway"));
            if (sub.contains("identifiers")) {
                for (const auto& id : sub.at("identifiers")) {
                    IdentifierScript is;
                    is.kind = data_type_from_name(id.at("kind"));
                    is.value = value_from_json(id);
                    if (id.contains("initial_policy"))
                        is.initial_policy = maybe_policy_from_json(id.at("initial_policy"));
                    ss.identifiers.push_back(std::move(is));
                }
            }
            if (sub.contains("rules"))
                ss.rules = pdc::rules_from_json(sub.at("rules").dump());
            if (sub.contains("prompt_answers")) {
                for (const auto& a : sub.at("prompt_answers"))
                    ss.prompt_answers.push_back(answer_from_name(a));
            }
            for (const auto& w : sub.at("path")) {
                ss.path.push_back({w.at("t").get<uint64_t>(),
                                   Position::from_meters(w.at("x").get<double>(),
                                                         w.at("y").get<double>())});
            }
            for (size_t i = 1; i < ss.path.size(); ++i) {
                if (ss.path[i].t_ms < ss.path[i - 1].t_ms)
                    throw ScriptError("path waypoints out of order for " + ss.name);
            }
            s.subjects.push_back(std::move(ss));
        }
        if (j.contains("withdrawals")) {
            for (const auto& w : j.at("withdrawals")) {
                s.withdrawals.push_back({w.at("t").get<uint64_t>(), w.at("subject"),
                                         device_id_from_hex(w.at("device_id")),
                                         data_type_from_name(w.at("data_type"))});
            }
        }
        if (j.contains("purge_times_ms")) {
            for (const auto& t : j.at("purge_times_ms"))
                s.purge_times_ms.push_back(t.get<uint64_t>());
        }
        if (j.contains("room_device"))
            s.room_device = device_id_from_hex(j.at("room_device"));
        if (s.kind == "meeting_room" && !s.room_device)
            throw ScriptError("meeting_room scenario needs a room_device");
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ScriptError(std::string("bad scenario script: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ScriptError(std::string("bad scenario script: ") + e.what());
    }
}

ScenarioScript script_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScriptError("cannot read scenario file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return script_from_json(buf.str());
}

namespace {

enum class EvKind { Move, BeaconTick, ScanPoll, RegistryPoll, DcFetch, Sense, Withdraw, Purge };

struct Event {
    uint64_t t = 0;
    int prio = 0;
    size_t seq = 0;
    EvKind kind = EvKind::Move;
    size_t a = 0;  // subject/device/withdrawal index
    size_t b = 0;  // waypoint index
};

struct PendingConsent {
    Declaration decl;
    Policy policy;
};

class Simulator {
public:
    Simulator(const ScenarioScript& script, Transport transport, uint64_t seed)
        : script_(script), transport_(transport), rng_(seed) {}

    ScenarioResult run();

private:
    struct SubjectRt {
        const SubjectScript* script = nullptr;
        std::unique_ptr<pdc::Custodian> custodian;
        std::optional<beacon::ScannerEndpoint> scanner;
        std::optional<registry::PollClient> poll;
        size_t next_answer = 0;
        std::vector<SubjectId> devices;  // gateway first
        std::vector<PendingConsent> pending;
        std::set<std::pair<DeviceId, uint32_t>> handled;
    };

    // beacon-mode consent channel for one subject
    class BeaconTransport : public pdc::ConsentTransport {
    public:
        BeaconTransport(Simulator& sim, SubjectRt& subject) : sim_(sim), subject_(subject) {}
        bool send(const Declaration& decl, const SubjectId& subject, const Policy& policy,
                  uint64_t now_ms, std::string& error) override {
            auto ep = sim_.beacons_.find(decl.device_id);
            if (ep == sim_.beacons_.end()) {
                error = "no beacon for device";
                return false;
            }
            beacon::ConsentFrame frame;
            frame.device_id = decl.device_id;
            frame.subject = subject;
            frame.timestamp_ms = now_ms;
            for (auto& b : frame.nonce) b = static_cast<uint8_t>(sim_.rng_());
            frame.policy = policy;
            auto status = sim_.bus_->write_consent(*ep->second, subject_.scanner->position(),
                                                   beacon::encode_consent_frame(frame),
                                                   now_ms);
            if (!status) {
                error = "write timed out (out of range)";
                return false;
            }
            if (*status != beacon::ConsentStatus::Accepted) {
                error = "consent refused by beacon";
                return false;
            }
            sim_.receipts_.push_back({decl.device_id, subject, policy, now_ms, "beacon"});
            return true;
        }

    private:
        Simulator& sim_;
        SubjectRt& subject_;
    };

    class RegistryTransport : public pdc::ConsentTransport {
    public:
        RegistryTransport(Simulator& sim, const std::string& token)
            : sim_(sim), token_(token) {}
        bool send(const Declaration& decl, const SubjectId& subject, const Policy& policy,
                  uint64_t now_ms, std::string& error) override {
            registry::ConsentRecord rec;
            rec.device_id = decl.device_id;
            rec.subject = subject;
            rec.policy = policy;
            int code = sim_.store_->post_consent(token_, rec, now_ms);
            if (code != registry::kOk) {
                error = "consent post failed: " + std::to_string(code);
                return false;
            }
            return true;
        }

    private:
        Simulator& sim_;
        std::string token_;
    };

    void setup();
    std::vector<Event> build_events() const;
    void record(uint64_t t, TraceStep step, Outcome outcome);
    Outcome apply_op(uint64_t t, const Operation& op);
    void process_declaration(SubjectRt& s, const Declaration& decl, uint64_t now);
    void try_emit(SubjectRt& s, const Declaration& decl, const Policy& policy, uint64_t now,
                  bool queue_when_uninformed);
    void retry_pending(SubjectRt& s, uint64_t now);
    void handle_move(SubjectRt& s, const Waypoint& wp, uint64_t now);
    void handle_sense(const DeviceScript& dev, uint64_t now);
    void handle_fetch(const DeviceScript& dev, uint64_t now);
    void evaluate_gate(uint64_t now);
    std::string dc_token(const DeviceScript& dev) const;
    std::string ds_token(const SubjectRt& s) const;

    const ScenarioScript& script_;
    Transport transport_;
    std::mt19937_64 rng_;

    SystemState state_;
    Trace trace_;
    std::vector<ConsentReceipt> receipts_;
    std::vector<SubjectRt> subjects_;

    std::optional<beacon::RadioBus> bus_;
    std::map<DeviceId, std::unique_ptr<beacon::BeaconEndpoint>> beacons_;

    std::optional<registry::RegistryStore> store_;
    std::map<DeviceId, uint64_t> consent_fetch_since_;

    bool gate_enabled_ = true;
    uint64_t gate_since_ = 0;
    std::vector<GateInterval> gate_intervals_;
};

std::string Simulator::dc_token(const DeviceScript& dev) const {
    return "dc-token-" + device_id_to_hex(dev.id);
}

std::string Simulator::ds_token(const SubjectRt& s) const {
    return "ds-token-" + s.script->name;
}

void Simulator::record(uint64_t t, TraceStep step, Outcome outcome) {
    trace_.push_back({t, std::move(step), std::move(outcome)});
}

Outcome Simulator::apply_op(uint64_t t, const Operation& op) {
    ApplyResult r = apply(state_, op, t);
    state_ = std::move(r.state);
    record(t, op, r.outcome);
    return r.outcome;
}

void Simulator::setup() {
    if (transport_ == Transport::Beacon) {
        bus_.emplace(script_.seed, 0.0);
    } else {
        registry::TokenTable tokens;
        for (const DeviceScript& d : script_.devices)
            tokens.add(dc_token(d), {"dc-" + device_id_to_hex(d.id), "dc"});
        for (const SubjectScript& s : script_.subjects)
            tokens.add("ds-token-" + s.name, {s.name, "ds"});
        store_.emplace(std::move(tokens));
    }

    for (const DeviceScript& d : script_.devices) {
        apply_op(0, DeclareOp{d.id, d.position, d.range, d.data_type, d.policy});
        apply_op(0, InstallOp{d.id, d.position, d.range, d.data_type, d.policy});
        Declaration decl{d.id, d.position, d.range, d.data_type, d.policy};
        if (transport_ == Transport::Beacon) {
            beacons_[d.id] = std::make_unique<beacon::BeaconEndpoint>(
                decl, script_.beacon_interval_ms, script_.range_margin_m);
        } else {
            registry::RegistryRecord rec{d.id, d.position, d.range, d.data_type, d.policy,
                                         0, {}};
            store_->put_device(dc_token(d), rec, 0);
        }
    }

    for (const SubjectScript& ss : script_.subjects) {
        SubjectRt rt;
        rt.script = &ss;
        rt.custodian = std::make_unique<pdc::Custodian>(ss.rules, ss.gateway);
        rt.devices.push_back(ss.gateway);
        Position start = ss.path.empty() ? Position{} : ss.path.front().position;
        if (transport_ == Transport::Beacon) {
            rt.scanner.emplace(*bus_, start);
        } else {
            registry::RegistryStore* store = &*store_;
            rt.poll.emplace(
                [store](double x, double y, double radius)
                    -> std::optional<std::vector<registry::RegistryRecord>> {
                    auto [code, records] = store->nearby(x, y, radius);
                    if (code != registry::kOk) return std::nullopt;
                    return records;
                },
                script_.lookahead_m, script_.poll_period_ms);
        }
        subjects_.push_back(std::move(rt));
        SubjectRt& s = subjects_.back();
        for (const IdentifierScript& id : ss.identifiers) {
            s.custodian->configure_identifier(id.kind, id.value);
            SubjectId source{id.kind, id.value};
            if (std::find(s.devices.begin(), s.devices.end(), source) == s.devices.end())
                s.devices.push_back(source);
            if (source != ss.gateway) apply_op(0, PairOp{source, ss.gateway});
            if (id.initial_policy || !id.value.empty())
                apply_op(0, DefineOp{source, id.kind, id.initial_policy, id.value});
        }
    }
}

std::vector<Event> Simulator::build_events() const {
    std::vector<Event> events;
    size_t seq = 0;
    auto push = [&](uint64_t t, int prio, EvKind kind, size_t a, size_t b) {
        events.push_back({t, prio, seq++, kind, a, b});
    };
    for (size_t si = 0; si < script_.subjects.size(); ++si) {
        const SubjectScript& ss = script_.subjects[si];
        for (size_t wi = 0; wi < ss.path.size(); ++wi)
            push(ss.path[wi].t_ms, 0, EvKind::Move, si, wi);
    }
    if (transport_ == Transport::Beacon) {
        for (uint64_t t = 0; t <= script_.duration_ms; t += script_.beacon_interval_ms) {
            push(t, 1, EvKind::BeaconTick, 0, 0);
            for (size_t si = 0; si < script_.subjects.size(); ++si)
                push(t, 2, EvKind::ScanPoll, si, 0);
        }
    } else {
        for (uint64_t t = 0; t <= script_.duration_ms; t += script_.poll_period_ms) {
            for (size_t si = 0; si < script_.subjects.size(); ++si)
                push(t, 2, EvKind::RegistryPoll, si, 0);
        }
    }
    for (size_t di = 0; di < script_.devices.size(); ++di) {
        for (uint64_t t : script_.devices[di].sense_times_ms) {
            if (transport_ == Transport::Registry) push(t, 3, EvKind::DcFetch, di, 0);
            push(t, 4, EvKind::Sense, di, 0);
        }
        if (transport_ == Transport::Registry)
            push(script_.duration_ms, 3, EvKind::DcFetch, di, 0);
    }
    for (size_t wi = 0; wi < script_.withdrawals.size(); ++wi)
        push(script_.withdrawals[wi].t_ms, 5, EvKind::Withdraw, wi, 0);
    for (uint64_t t : script_.purge_times_ms) push(t, 6, EvKind::Purge, 0, 0);
    std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
        if (a.t != b.t) return a.t < b.t;
        if (a.prio != b.prio) return a.prio < b.prio;
        return a.seq < b.seq;
    });
    return events;
}

void Simulator::process_declaration(SubjectRt& s, const Declaration& decl, uint64_t now) {
    auto key = std::make_pair(decl.device_id, beacon::declaration_content_id(decl));
    if (s.handled.contains(key)) return;
    pdc::Decision decision = s.custodian->consider(decl, now);
    if (std::holds_alternative<pdc::PromptDecision>(decision)) {
        if (s.next_answer < s.script->prompt_answers.size()) {
            decision = s.custodian->answer_prompt(
                decl, s.script->prompt_answers[s.next_answer++]);
        } else {
            s.handled.insert(key);
            return;  // unattended prompt, no decision taken
        }
    }
    if (const auto* consent = std::get_if<pdc::ConsentDecision>(&decision)) {
        s.handled.insert(key);
        try_emit(s, decl, consent->policy, now, true);
    } else {
        s.handled.insert(key);
    }
}

void Simulator::try_emit(SubjectRt& s, const Declaration& decl, const Policy& policy,
                         uint64_t now, bool queue_when_uninformed) {
    std::unique_ptr<pdc::ConsentTransport> transport;
    if (transport_ == Transport::Beacon) {
        transport = std::make_unique<BeaconTransport>(*this, s);
    } else {
        transport = std::make_unique<RegistryTransport>(*this, ds_token(s));
    }
    pdc::EmitOutcome out =
        s.custodian->emit_consent({policy}, decl, state_, *transport, now);
    if (out.delivered) {
        apply_op(now, *out.define);
        evaluate_gate(now);
        return;
    }
    if (queue_when_uninformed && out.error == "device not known to gateway")
        s.pending.push_back({decl, policy});
}

void Simulator::retry_pending(SubjectRt& s, uint64_t now) {
    if (s.pending.empty()) return;
    std::vector<PendingConsent> still;
    for (PendingConsent& p : s.pending) {
        if (state_.knows.contains(KnowsKey{s.custodian->gateway(), p.decl.device_id})) {
            try_emit(s, p.decl, p.policy, now, false);
        } else {
            still.push_back(std::move(p));
        }
    }
    s.pending = std::move(still);
}

void Simulator::handle_move(SubjectRt& s, const Waypoint& wp, uint64_t now) {
    for (const SubjectId& dev : s.devices) apply_op(now, MoveOp{dev, wp.position});
    if (s.scanner) s.scanner->move(wp.position);
    retry_pending(s, now);
}

void Simulator::handle_sense(const DeviceScript& dev, uint64_t now) {
    if (script_.room_device && *script_.room_device == dev.id && !gate_enabled_)
        return;  // processing disabled until consent matches occupancy
    DeviceInfo cfg{dev.position, dev.range, dev.data_type, dev.policy};
    std::set<SubjectId> targets;
    for (const SubjectRt& s : subjects_) {
        for (const SubjectId& sid : s.devices) {
            if (sid.kind != dev.data_type) continue;
            auto pos = state_.position.find(sid);
            bool in_range =
                pos != state_.position.end() && within(pos->second, cfg.position, cfg.range);
            bool tracked = state_.store_c.contains(StoreCKey{dev.id, sid, dev.data_type});
            if (in_range || tracked) targets.insert(sid);
        }
    }
    for (const SubjectId& sid : targets) {
        StoredPair held = state_.store_s_pair({sid, dev.data_type});
        apply_op(now, CollectOp{dev.id, sid, dev.data_type, held.policy, held.value});
    }
}

void Simulator::handle_fetch(const DeviceScript& dev, uint64_t now) {
    uint64_t since = 0;
    if (auto it = consent_fetch_since_.find(dev.id); it != consent_fetch_since_.end())
        since = it->second;
    auto [code, records] = store_->get_consents(dc_token(dev), dev.id, since);
    if (code != registry::kOk) return;
    for (const registry::ConsentRecord& rec : records) {
        receipts_.push_back(
            {rec.device_id, rec.subject, rec.policy, rec.timestamp_ms, "registry"});
        consent_fetch_since_[dev.id] = rec.timestamp_ms + 1;
    }
    if (!records.empty()) evaluate_gate(now);
}

void Simulator::evaluate_gate(uint64_t now) {
    if (!script_.room_device) return;
    const DeviceScript* room = nullptr;
    for (const DeviceScript& d : script_.devices) {
        if (d.id == *script_.room_device) room = &d;
    }
    if (!room) return;
    size_t occupancy = 0;
    size_t consenters = 0;
    for (const SubjectRt& s : subjects_) {
        auto pos = state_.position.find(s.custodian->gateway());
        bool present = pos != state_.position.end() &&
                       within(pos->second, room->position, room->range);
        if (!present) continue;
        ++occupancy;
        bool consented = std::any_of(
            receipts_.begin(), receipts_.end(), [&](const ConsentReceipt& r) {
                if (r.device_id != room->id) return false;
                return std::find(s.devices.begin(), s.devices.end(), r.subject) !=
                       s.devices.end();
            });
        if (consented) ++consenters;
    }
    bool enabled = consenters == occupancy;
    if (enabled != gate_enabled_) {
        if (gate_enabled_) gate_intervals_.push_back({gate_since_, now});
        gate_since_ = now;
        gate_enabled_ = enabled;
    }
}

ScenarioResult Simulator::run() {
    setup();
    evaluate_gate(0);
    for (const Event& ev : build_events()) {
        switch (ev.kind) {
            case EvKind::Move:
                handle_move(subjects_[ev.a], script_.subjects[ev.a].path[ev.b], ev.t);
                evaluate_gate(ev.t);
                break;
            case EvKind::BeaconTick:
                for (const DeviceScript& d : script_.devices)
                    beacons_.at(d.id)->tick(ev.t, *bus_);
                break;
            case EvKind::ScanPoll: {
                SubjectRt& s = subjects_[ev.a];
                for (const Declaration& d : s.scanner->poll())
                    process_declaration(s, d, ev.t);
                break;
            }
            case EvKind::RegistryPoll: {
                SubjectRt& s = subjects_[ev.a];
                Position pos{};
                if (auto it = state_.position.find(s.custodian->gateway());
                    it != state_.position.end())
                    pos = it->second;
                for (const Declaration& d : s.poll->poll_once(pos, ev.t))
                    process_declaration(s, d, ev.t);
                break;
            }
            case EvKind::DcFetch:
                handle_fetch(script_.devices[ev.a], ev.t);
                break;
            case EvKind::Sense:
                handle_sense(script_.devices[ev.a], ev.t);
                break;
            case EvKind::Withdraw: {
                const WithdrawalScript& w = script_.withdrawals[ev.a];
                for (SubjectRt& s : subjects_) {
                    if (s.script->name != w.subject_name) continue;
                    try {
                        pdc::WithdrawOps ops =
                            s.custodian->withdraw(state_, w.device, w.data_type);
                        apply_op(ev.t, ops.define);
                        apply_op(ev.t, ops.require);
                    } catch (const std::runtime_error&) {
                        // nothing to withdraw from
                    }
                }
                break;
            }
            case EvKind::Purge:
                state_ = purge_expired(state_, ev.t);
                record(ev.t, PurgeStep{}, Outcome::ok());
                break;
        }
    }
    if (transport_ == Transport::Beacon) {
        // receipts_ already mirrors every accepted beacon write
    }
    if (script_.room_device && gate_enabled_)
        gate_intervals_.push_back({gate_since_, script_.duration_ms});
    ScenarioResult result;
    result.trace = std::move(trace_);
    result.receipts = std::move(receipts_);
    result.gate_enabled = std::move(gate_intervals_);
    result.final_state = std::move(state_);
    return result;
}

}  // namespace

ScenarioResult run(const ScenarioScript& script, std::optional<Transport> transport_override,
                   std::optional<uint64_t> seed_override) {
    Transport transport = transport_override.value_or(script.transport);
    uint64_t seed = seed_override.value_or(script.seed);
    Simulator sim(script, transport, seed);
    return sim.run();
}

namespace {

ScenarioResult run_kind(const ScenarioScript& script, const std::string& kind) {
    if (script.kind != kind)
        throw ScriptError("expected a " + kind + " script, got " + script.kind);
    return run(script);
}

}  // namespace

ScenarioResult run_anpr(const ScenarioScript& script) { return run_kind(script, "anpr"); }
ScenarioResult run_mall(const ScenarioScript& script) { return run_kind(script, "mall"); }
ScenarioResult run_meeting_room(const ScenarioScript& script) {
    return run_kind(script, "meeting_room");
}

std::vector<Operation> applied_operations(const Trace& trace) {
    std::vector<Operation> out;
    for (const TraceEntry& e : trace) {
        if (!e.outcome.applied) continue;
        if (const auto* op = std::get_if<Operation>(&e.step)) out.push_back(*op);
    }
    return out;
}

}  // namespace icf::scenario
