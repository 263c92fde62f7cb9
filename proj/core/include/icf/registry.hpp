#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "icf/state.hpp"

namespace icf::registry {

struct RegistryRecord {
    DeviceId device_id{};
    Position position;
    Range range;
    DataType data_type = DataType::MacAddress;
    Policy policy;
    uint64_t declared_at_ms = 0;
    std::string human_readable;  // server-rendered from the policy

    Declaration declaration() const {
        return {device_id, position, range, data_type, policy};
    }
    bool operator==(const RegistryRecord&) const = default;
};

struct ConsentRecord {
    DeviceId device_id{};
    SubjectId subject;
    Policy policy;
    uint64_t timestamp_ms = 0;
    std::string token_id;  // submitting principal

    bool operator==(const ConsentRecord&) const = default;
};

// HTTP-style status codes shared by the embedded store and the service.
constexpr int kOk = 200;
constexpr int kBadRequest = 400;
constexpr int kUnauthorized = 401;
constexpr int kForbidden = 403;
constexpr int kNotFound = 404;

struct Principal {
    std::string name;
    std::string role;  // "dc" or "ds"
    bool operator==(const Principal&) const = default;
};

// Opaque bearer tokens bound to principals at service start.
class TokenTable {
public:
    void add(const std::string& token, Principal p);
    std::optional<Principal> lookup(const std::string& token) const;

    // JSON list of {token, principal, role}
    static TokenTable from_json(const std::string& text);
    static TokenTable from_file(const std::string& path);

private:
    std::map<std::string, Principal> tokens_;
};

// Device registry plus append-only consent log. Thread safe; per-device
// writes are atomic, the consent log has a single append point.
class RegistryStore {
public:
    explicit RegistryStore(TokenTable tokens);

    int put_device(const std::string& token, RegistryRecord record, uint64_t now_ms);
    std::pair<int, std::optional<RegistryRecord>> get_device(const DeviceId& id) const;
    int delete_device(const std::string& token, const DeviceId& id);

    // All records whose collection zone intersects the query disc
    // (distance <= radius + record range, boundary inclusive).
    std::pair<int, std::vector<RegistryRecord>> nearby(double x_m, double y_m,
                                                       double radius_m) const;

    int post_consent(const std::string& token, ConsentRecord record, uint64_t now_ms);
    std::pair<int, std::vector<ConsentRecord>> get_consents(const std::string& token,
                                                            const DeviceId& id,
                                                            uint64_t since_ms) const;

    std::vector<RegistryRecord> all_devices() const;

private:
    mutable std::mutex mu_;
    TokenTable tokens_;
    std::map<DeviceId, RegistryRecord> devices_;
    std::map<DeviceId, std::string> owners_;
    std::vector<ConsentRecord> consents_;
};

// One nearby() query: either the record list or failure (unreachable).
using NearbyQuery = std::function<std::optional<std::vector<RegistryRecord>>(
    double x_m, double y_m, double radius_m)>;

// Periodically queries the registry around the current position and
// emits newly seen or changed declarations (change detection by
// declared_at).
class PollClient {
public:
    PollClient(NearbyQuery query, double lookahead_m, uint64_t period_ms);

    bool due(uint64_t now_ms) const;
    std::vector<Declaration> poll_once(Position current, uint64_t now_ms);

    uint64_t period_ms() const { return period_ms_; }
    // Time since the last successful poll; grows while unreachable.
    uint64_t staleness_ms(uint64_t now_ms) const;

private:
    NearbyQuery query_;
    double lookahead_m_;
    uint64_t period_ms_;
    std::optional<uint64_t> last_success_ms_;
    std::optional<uint64_t> last_attempt_ms_;
    std::map<DeviceId, uint64_t> seen_;  // device -> declared_at
};

}  // namespace icf::registry
