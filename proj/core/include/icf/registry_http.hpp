#pragma once

#include <functional>
#include <memory>
#include <string>

#include "icf/registry.hpp"

namespace icf::registry {

// Wire JSON: positions and ranges in meters as decimal numbers,
// retention in seconds, device ids and byte strings as hex.
std::string record_to_json(const RegistryRecord& rec);
RegistryRecord record_from_json(const std::string& text);
std::string consent_to_json(const ConsentRecord& rec);
ConsentRecord consent_from_json(const std::string& text);

// HTTP/JSON face of a RegistryStore:
//   PUT    /devices/{id}
//   GET    /devices/{id}
//   DELETE /devices/{id}
//   GET    /devices?x=&y=&radius=
//   POST   /consents
//   GET    /consents?device_id=&since=
// Authorization: Bearer <token>
class HttpService {
public:
    HttpService(RegistryStore& store, std::function<uint64_t()> clock_ms);
    ~HttpService();

    // Binds to an ephemeral port and serves on a background thread.
    // Returns the bound port, or 0 on failure.
    int start(const std::string& host);
    // Binds to a fixed address and blocks. Returns false if the port
    // cannot be bound.
    bool serve(const std::string& host, int port);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Thin client for the service above; also usable as a PollClient query.
class HttpClient {
public:
    HttpClient(std::string host, int port, std::string token);
    ~HttpClient();

    int put_device(const RegistryRecord& rec);
    std::pair<int, std::optional<RegistryRecord>> get_device(const DeviceId& id);
    int delete_device(const DeviceId& id);
    std::optional<std::vector<RegistryRecord>> nearby(double x_m, double y_m,
                                                      double radius_m);
    int post_consent(const ConsentRecord& rec);
    std::pair<int, std::vector<ConsentRecord>> get_consents(const DeviceId& id,
                                                            uint64_t since_ms);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace icf::registry
