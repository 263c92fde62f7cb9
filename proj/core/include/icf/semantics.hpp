#pragma once

#include <string>
#include <variant>

#include "icf/state.hpp"

namespace icf {

// The seven transition-system operations. Parameter names follow the
// roles in the contracts, not single letters.
struct InstallOp {
    DeviceId device{};
    Position position;
    Range range;
    DataType data_type = DataType::MacAddress;
    Policy policy;
    bool operator==(const InstallOp&) const = default;
};

struct DeclareOp {
    DeviceId device{};
    Position position;
    Range range;
    DataType data_type = DataType::MacAddress;
    Policy policy;
    bool operator==(const DeclareOp&) const = default;
};

struct CollectOp {
    DeviceId device{};
    SubjectId subject;
    DataType data_type = DataType::MacAddress;
    MaybePolicy policy;  // the DS policy exposed by the subject device
    MaybeValue value;
    bool operator==(const CollectOp&) const = default;
};

struct MoveOp {
    SubjectId subject;
    Position position;
    bool operator==(const MoveOp&) const = default;
};

struct DefineOp {
    SubjectId subject;
    DataType data_type = DataType::MacAddress;
    MaybePolicy policy;
    MaybeValue value;
    bool operator==(const DefineOp&) const = default;
};

struct PairOp {
    SubjectId subject;
    SubjectId host;
    bool operator==(const PairOp&) const = default;
};

struct RequireOp {
    SubjectId requester;     // device hosting the policy
    SubjectId data_source;   // device the data was collected from
    DeviceId device{};
    DataType data_type = DataType::MacAddress;
    MaybePolicy policy;
    MaybeValue value;
    bool operator==(const RequireOp&) const = default;
};

using Operation =
    std::variant<InstallOp, DeclareOp, CollectOp, MoveOp, DefineOp, PairOp, RequireOp>;

std::string operation_tag(const Operation& op);

struct Outcome {
    bool applied = false;
    std::string reason;  // first failed precondition clause when rejected

    static Outcome ok() { return {true, {}}; }
    static Outcome rejected(std::string why) { return {false, std::move(why)}; }
    bool operator==(const Outcome&) const = default;
};

struct ApplyResult {
    SystemState state;
    Outcome outcome;
};

struct MalformedOperationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Executes one operation. Precondition failures reject and leave the
// state untouched; only structurally invalid parameters throw.
ApplyResult apply(const SystemState& st, const Operation& op, uint64_t now_ms);

// Independent postcondition check: rebuilds the expected post-state
// directly from the contract predicates and compares, frame rule included.
// Call only for operations that were Applied.
bool check_postcondition(const SystemState& before, const Operation& op,
                         const SystemState& after, uint64_t now_ms);

// Clears every controller entry whose retention has elapsed since its
// collection timestamp (inclusive: elapsed >= retention purges).
SystemState purge_expired(const SystemState& st, uint64_t now_ms);

}  // namespace icf
