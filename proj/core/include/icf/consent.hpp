#pragma once

#include <cstdint>
#include <string>

#include "icf/policy.hpp"
#include "icf/state.hpp"

namespace icf {

// Controller-side proof that a specific subject consented under a
// specific policy at a specific time.
struct ConsentReceipt {
    DeviceId device_id{};
    SubjectId subject;
    Policy policy;
    uint64_t timestamp_ms = 0;
    std::string transport;  // "beacon" or "registry"

    bool operator==(const ConsentReceipt&) const = default;
};

}  // namespace icf
