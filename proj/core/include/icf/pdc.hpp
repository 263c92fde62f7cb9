#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "icf/semantics.hpp"
#include "icf/state.hpp"

namespace icf::pdc {

enum class Polarity { Positive, Negative };

enum class DurationKind { Permanent, Once, Until };

struct ConsentRule {
    Polarity polarity = Polarity::Positive;
    DataType data_type = DataType::MacAddress;
    std::optional<ControllerCategory> controller_category;  // unset matches any
    std::string controller_id;                              // empty matches any
    std::set<Purpose> purposes;                             // empty matches any
    MaybePolicy bound;  // positive rules only
    DurationKind duration = DurationKind::Permanent;
    uint64_t until_ms = 0;  // Until only

    bool matches(const Declaration& decl) const;
    bool expired(uint64_t now_ms) const;
    bool operator==(const ConsentRule&) const = default;
};

struct ConsentDecision {
    Policy policy;  // fully instantiated, no wildcards
    bool operator==(const ConsentDecision&) const = default;
};
struct RefuseDecision {
    bool operator==(const RefuseDecision&) const = default;
};
struct PromptDecision {
    bool operator==(const PromptDecision&) const = default;
};

using Decision = std::variant<ConsentDecision, RefuseDecision, PromptDecision>;

struct DecisionDetail {
    Decision decision;
    std::optional<size_t> rule_index;  // rule that determined the decision
};

// Pure: negative rules beat positive ones; within a polarity the first
// matching rule in list order wins; anything unmatched prompts.
Decision decide(const std::vector<ConsentRule>& rules, const Declaration& decl,
                uint64_t now_ms);
DecisionDetail decide_detail(const std::vector<ConsentRule>& rules, const Declaration& decl,
                             uint64_t now_ms);

// Specializes a generic bound to the declaring controller: identity
// fields are pinned, everything else is preserved verbatim.
Policy instantiate(const ConsentRule& rule, const Declaration& decl);

enum class PromptAnswer { AcceptOnce, AcceptAlways, RefuseOnce, RefuseAlways };

struct PromptOutcome {
    Decision decision;
    std::vector<ConsentRule> appended_rules;  // persisted only for Always answers
};

PromptOutcome handle_prompt(const Declaration& decl, PromptAnswer answer);

// Rule persistence: JSON list in evaluation order.
std::string rules_to_json(const std::vector<ConsentRule>& rules);
std::vector<ConsentRule> rules_from_json(const std::string& text);
std::vector<ConsentRule> rules_from_file(const std::string& path);
void rules_to_file(const std::vector<ConsentRule>& rules, const std::string& path);

struct MissingIdentifierError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Delivery of one consent message over the selected transport.
class ConsentTransport {
public:
    virtual ~ConsentTransport() = default;
    // true when the controller accepted the consent
    virtual bool send(const Declaration& decl, const SubjectId& subject,
                      const Policy& policy, uint64_t now_ms, std::string& error) = 0;
};

struct EmitOutcome {
    bool delivered = false;
    std::string error;
    std::optional<DefineOp> define;  // to enqueue when delivered
};

struct WithdrawOps {
    DefineOp define;    // pins the retention-zero bound on the gateway
    RequireOp require;  // pushes it to the controller
};

// Decision engine state for one gateway device: the ordered rule list,
// the per-data-type identifier vault and ONCE-rule consumption.
class Custodian {
public:
    Custodian(std::vector<ConsentRule> rules, SubjectId gateway);

    const SubjectId& gateway() const { return gateway_; }
    const std::vector<ConsentRule>& rules() const { return rules_; }

    void configure_identifier(DataType t, Bytes value);
    std::optional<SubjectId> identifier_for(DataType t) const;

    // Decides and consumes a matching ONCE rule.
    Decision consider(const Declaration& decl, uint64_t now_ms);

    // Resolves a pending prompt; Always answers are appended to the rules.
    Decision answer_prompt(const Declaration& decl, PromptAnswer answer);

    // Guarded consent emission: refuses to send for a device the gateway
    // has not been informed about, or without a configured identifier.
    EmitOutcome emit_consent(const ConsentDecision& decision, const Declaration& decl,
                             const SystemState& st, ConsentTransport& transport,
                             uint64_t now_ms);

    // Retention-zero deletion request for data held by `device`.
    WithdrawOps withdraw(const SystemState& st, const DeviceId& device, DataType t) const;

private:
    std::vector<ConsentRule> rules_;
    SubjectId gateway_;
    std::map<DataType, Bytes> vault_;
};

}  // namespace icf::pdc
