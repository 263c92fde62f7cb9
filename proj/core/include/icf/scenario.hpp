#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "icf/consent.hpp"
#include "icf/pdc.hpp"
#include "icf/trace.hpp"

namespace icf::scenario {

enum class Transport { Beacon, Registry };

std::string transport_name(Transport t);
Transport transport_from_name(const std::string& name);

struct Waypoint {
    uint64_t t_ms = 0;
    Position position;
    bool operator==(const Waypoint&) const = default;
};

struct DeviceScript {
    DeviceId id{};
    Position position;
    Range range;
    DataType data_type = DataType::MacAddress;
    Policy policy;
    std::vector<uint64_t> sense_times_ms;
};

struct IdentifierScript {
    DataType kind = DataType::MacAddress;
    Bytes value;
    MaybePolicy initial_policy;  // DS policy predefined on the source device
};

struct SubjectScript {
    std::string name;
    SubjectId gateway;
    std::vector<IdentifierScript> identifiers;
    std::vector<pdc::ConsentRule> rules;
    std::vector<pdc::PromptAnswer> prompt_answers;
    std::vector<Waypoint> path;
};

struct WithdrawalScript {
    uint64_t t_ms = 0;
    std::string subject_name;
    DeviceId device{};
    DataType data_type = DataType::MacAddress;
};

struct ScenarioScript {
    std::string name;
    std::string kind;  // "anpr", "mall" or "meeting_room"
    Transport transport = Transport::Beacon;
    uint64_t seed = 0;
    uint64_t duration_ms = 0;
    uint64_t beacon_interval_ms = 250;
    uint64_t poll_period_ms = 2000;
    double lookahead_m = 0.0;
    double range_margin_m = 0.0;
    std::vector<DeviceScript> devices;
    std::vector<SubjectScript> subjects;
    std::vector<WithdrawalScript> withdrawals;
    std::vector<uint64_t> purge_times_ms;
    std::optional<DeviceId> room_device;  // meeting_room gate target
};

struct ScriptError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

ScenarioScript script_from_json(const std::string& text);
ScenarioScript script_from_file(const std::string& path);

struct GateInterval {
    uint64_t begin_ms = 0;
    uint64_t end_ms = 0;
    bool operator==(const GateInterval&) const = default;
};

struct ScenarioResult {
    Trace trace;
    std::vector<ConsentReceipt> receipts;
    std::vector<GateInterval> gate_enabled;  // meeting_room only
    SystemState final_state;
};

// Deterministic discrete-event run over a virtual millisecond clock;
// identical (script, transport, seed) yield identical traces.
ScenarioResult run(const ScenarioScript& script,
                   std::optional<Transport> transport_override = std::nullopt,
                   std::optional<uint64_t> seed_override = std::nullopt);

ScenarioResult run_anpr(const ScenarioScript& script);
ScenarioResult run_mall(const ScenarioScript& script);
ScenarioResult run_meeting_room(const ScenarioScript& script);

// Applied semantics-level operations, for transport-equivalence checks.
std::vector<Operation> applied_operations(const Trace& trace);

}  // namespace icf::scenario
