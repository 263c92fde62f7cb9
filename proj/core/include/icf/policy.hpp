#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace icf {

using Bytes = std::vector<uint8_t>;

enum class ControllerCategory : uint8_t {
    Museum = 0x01,
    Retail = 0x02,
    RoadOperator = 0x03,
    Employer = 0x04,
    Other = 0x05,  // wildcard on the bound side
};

enum class Purpose : uint8_t {
    CountingVisitors = 0x01,
    Billing = 0x02,
    Profiling = 0x03,
    Security = 0x04,
    Analytics = 0x05,
};

enum class Recipient : uint8_t {
    ControllerOnly = 0x01,
    Partners = 0x02,
    Public = 0x03,
};

// A privacy policy, used both as a DC commitment and as a DS bound.
// On the DS side controller_id may be empty (matches any controller) and
// controller_category may be Other (matches any category).
struct Policy {
    std::string controller_id;  // UTF-8, <= 32 octets, empty allowed
    ControllerCategory controller_category = ControllerCategory::Other;
    std::set<Purpose> purposes;
    uint32_t retention_seconds = 0;  // 0 means delete immediately
    std::set<Recipient> recipients;
    bool cross_border = false;

    bool operator==(const Policy&) const = default;
    auto operator<=>(const Policy&) const = default;
};

// The undefined value is modelled as an empty optional throughout.
using MaybePolicy = std::optional<Policy>;
using MaybeValue = std::optional<Bytes>;

struct UndefinedOperandError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct MalformedTlvError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// p1 is at least as restrictive a commitment as p2 demands (fieldwise).
bool implies(const Policy& p1, const Policy& p2);

// Comparing with an undefined policy is an error.
bool implies(const MaybePolicy& p1, const MaybePolicy& p2);

// Left-biased combination: a unless a is undefined.
template <typename T>
std::optional<T> override_with(const std::optional<T>& a, const std::optional<T>& b) {
    return a.has_value() ? a : b;
}

// Canonical TLV encoding; equal policies encode to identical bytes.
Bytes encode_policy(const Policy& p);
Policy decode_policy(const Bytes& bytes);

std::string display_name(ControllerCategory c);
std::string display_name(Purpose p);
std::string display_name(Recipient r);

// One sentence per field, deterministic.
std::string render_policy(const Policy& p);

}  // namespace icf
