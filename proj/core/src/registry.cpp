#include "icf/registry.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "icf/json_io.hpp"

namespace icf::registry {

void TokenTable::add(const std::string& token, Principal p) {
    tokens_[token] = std::move(p);
}

std::optional<Principal> TokenTable::lookup(const std::string& token) const {
    auto it = tokens_.find(token);
    if (it == tokens_.end()) return std::nullopt;
    return it->second;
}

TokenTable TokenTable::from_json(const std::string& text) {
    TokenTable t;
    nlohmann::json j = nlohmann::json::parse(text);
    for (const auto& e : j) {
        t.add(e.at("token"), Principal{e.at("principal"), e.at("role")});
    }
    return t;
}

TokenTable TokenTable::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read token file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

RegistryStore::RegistryStore(TokenTable tokens) : tokens_(std::move(tokens)) {}

int RegistryStore::put_device(const std::string& token, RegistryRecord record,
                              uint64_t now_ms) {
    auto principal = tokens_.lookup(token);
    if (!principal || principal->role != "dc") return kUnauthorized;
    std::lock_guard lock(mu_);
    auto owner = owners_.find(record.device_id);
    if (owner != owners_.end() && owner->second != principal->name) return kForbidden;
    record.declared_at_ms = now_ms;
    record.human_readable = render_policy(record.policy);
    owners_[record.device_id] = principal->name;
    devices_[record.device_id] = std::move(record);
    return kOk;
}

std::pair<int, std::optional<RegistryRecord>> RegistryStore::get_device(
    const DeviceId& id) const {
    std::lock_guard lock(mu_);
    auto it = devices_.find(id);
    if (it == devices_.end()) return {kNotFound, std::nullopt};
    return {kOk, it->second};
}

int RegistryStore::delete_device(const std::string& token, const DeviceId& id) {
    auto principal = tokens_.lookup(token);
    if (!principal || principal->role != "dc") return kUnauthorized;
    std::lock_guard lock(mu_);
    auto it = devices_.find(id);
    if (it == devices_.end()) return kNotFound;
    if (owners_.at(id) != principal->name) return kForbidden;
    devices_.erase(it);
    owners_.erase(id);
    return kOk;
}

std::pair<int, std::vector<RegistryRecord>> RegistryStore::nearby(double x_m, double y_m,
                                                                  double radius_m) const {
    if (radius_m < 0) return {kBadRequest, {}};
    Position q = Position::from_meters(x_m, y_m);
    int64_t radius_cm = std::llround(radius_m * 100.0);
    std::lock_guard lock(mu_);
    std::vector<RegistryRecord> out;
    for (const auto& [id, rec] : devices_) {
        int64_t dx = int64_t(q.x_cm) - rec.position.x_cm;
        int64_t dy = int64_t(q.y_cm) - rec.position.y_cm;
        int64_t reach = radius_cm + int64_t(rec.range.r_dm) * 10;
        if (dx * dx + dy * dy <= reach * reach) out.push_back(rec);
    }
    return {kOk, out};
}

int RegistryStore::post_consent(const std::string& token, ConsentRecord record,
                                uint64_t now_ms) {
    auto principal = tokens_.lookup(token);
    if (!principal) return kUnauthorized;
    std::lock_guard lock(mu_);
    record.timestamp_ms = now_ms;
    record.token_id = principal->name;
    consents_.push_back(std::move(record));
    return kOk;
}

std::pair<int, std::vector<ConsentRecord>> RegistryStore::get_consents(
    const std::string& token, const DeviceId& id, uint64_t since_ms) const {
    auto principal = tokens_.lookup(token);
    if (!principal) return {kUnauthorized, {}};
    std::lock_guard lock(mu_);
    auto owner = owners_.find(id);
    if (owner == owners_.end() || owner->second != principal->name) return {kForbidden, {}};
    std::vector<ConsentRecord> out;
    for (const ConsentRecord& c : consents_) {
        if (c.device_id == id && c.timestamp_ms >= since_ms) out.push_back(c);
    }
    return {kOk, out};
}

std::vector<RegistryRecord> RegistryStore::all_devices() const {
    std::lock_guard lock(mu_);
    std::vector<RegistryRecord> out;
    for (const auto& [id, rec] : devices_) out.push_back(rec);
    return out;
}

PollClient::PollClient(NearbyQuery query, double lookahead_m, uint64_t period_ms)
    : query_(std::move(query)), lookahead_m_(lookahead_m),
      period_ms_(period_ms == 0 ? 2000 : period_ms) {}

bool PollClient::due(uint64_t now_ms) const {
    return !last_attempt_ms_ || *last_attempt_ms_ + period_ms_ <= now_ms;
}

std::vector<Declaration> PollClient::poll_once(Position current, uint64_t now_ms) {
    last_attempt_ms_ = now_ms;
    auto result = query_(current.x_m(), current.y_m(), lookahead_m_);
    if (!result) return {};  // unreachable, staleness keeps growing
    last_success_ms_ = now_ms;
    std::vector<Declaration> fresh;
    for (const RegistryRecord& rec : *result) {
        auto it = seen_.find(rec.device_id);
        if (it != seen_.end() && it->second == rec.declared_at_ms) continue;
        seen_[rec.device_id] = rec.declared_at_ms;
        fresh.push_back(rec.declaration());
    }
    return fresh;
}

uint64_t PollClient::staleness_ms(uint64_t now_ms) const {
    if (!last_success_ms_) return now_ms;
    return now_ms - *last_success_ms_;
}

}  // namespace icf::registry
