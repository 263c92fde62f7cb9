#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "icf/semantics.hpp"

namespace icf {

// Raw state writes bypassing the transition system. They only appear in
// hand-built traces (misbehaving-actor counterexamples); the verifier
// applies them without precondition checks.
struct SetStoreCMutation {
    StoreCKey key;
    MaybePolicy policy;
    MaybeValue value;
    uint64_t collected_at_ms = 0;
    bool operator==(const SetStoreCMutation&) const = default;
};

struct EraseKnowsMutation {
    KnowsKey key;
    bool operator==(const EraseKnowsMutation&) const = default;
};

// A retention sweep at the entry's timestamp.
struct PurgeStep {
    bool operator==(const PurgeStep&) const = default;
};

using TraceStep = std::variant<Operation, PurgeStep, SetStoreCMutation, EraseKnowsMutation>;

struct TraceEntry {
    uint64_t timestamp_ms = 0;
    TraceStep step;
    Outcome outcome;
    bool operator==(const TraceEntry&) const = default;
};

using Trace = std::vector<TraceEntry>;

struct ReplayError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PropertyViolation {
    int property = 0;  // 1..4
    size_t entry_index = 0;
    std::string detail;
    bool operator==(const PropertyViolation&) const = default;
};

// Replays the trace from the empty state and checks the four derived
// properties at each step.
std::vector<PropertyViolation> verify_trace(const Trace& trace);

// One JSON object per line.
std::string trace_to_jsonl(const Trace& trace);
Trace trace_from_jsonl(const std::string& text);
void write_trace_file(const Trace& trace, const std::string& path);
Trace read_trace_file(const std::string& path);

std::string trace_step_tag(const TraceStep& step);

}  // namespace icf
