#include "icf/registry_http.hpp"

#include <thread>

#include <httplib.h>

#include "icf/json_io.hpp"

namespace icf::registry {

namespace {

nlohmann::json record_json(const RegistryRecord& rec) {
    return {{"device_id", device_id_to_hex(rec.device_id)},
            {"x", rec.position.x_m()},
            {"y", rec.position.y_m()},
            {"range", rec.range.meters()},
            {"data_type", data_type_name(rec.data_type)},
            {"policy", rec.policy},
            {"declared_at", rec.declared_at_ms},
            {"human_readable", rec.human_readable}};
}

RegistryRecord record_from(const nlohmann::json& j) {
    RegistryRecord rec;
    rec.device_id = device_id_from_hex(j.at("device_id"));
    rec.position = Position::from_meters(j.at("x").get<double>(), j.at("y").get<double>());
    rec.range = Range::from_meters(j.at("range").get<double>());
    rec.data_type = data_type_from_name(j.at("data_type"));
    rec.policy = j.at("policy").get<Policy>();
    rec.declared_at_ms = j.value("declared_at", uint64_t{0});
    rec.human_readable = j.value("human_readable", std::string{});
    return rec;
}

nlohmann::json consent_json(const ConsentRecord& rec) {
    return {{"device_id", device_id_to_hex(rec.device_id)},
            {"subject", rec.subject},
            {"policy", rec.policy},
            {"timestamp", rec.timestamp_ms},
            {"token_id", rec.token_id}};
}

ConsentRecord consent_from(const nlohmann::json& j) {
    ConsentRecord rec;
    rec.device_id = device_id_from_hex(j.at("device_id"));
    rec.subject = j.at("subject").get<SubjectId>();
    rec.policy = j.at("policy").get<Policy>();
    rec.timestamp_ms = j.value("timestamp", uint64_t{0});
    rec.token_id = j.value("token_id", std::string{});
    return rec;
}

std::string bearer_token(const httplib::Request& req) {
    std::string auth = req.get_header_value("Authorization");
    const std::string prefix = "Bearer ";
    if (auth.rfind(prefix, 0) != 0) return {};
    return auth.substr(prefix.size());
}

}  // namespace

std::string record_to_json(const RegistryRecord& rec) { return record_json(rec).dump(); }

RegistryRecord record_from_json(const std::string& text) {
    return record_from(nlohmann::json::parse(text));
}

std::string consent_to_json(const ConsentRecord& rec) { return consent_json(rec).dump(); }

ConsentRecord consent_from_json(const std::string& text) {
    return consent_from(nlohmann::json::parse(text));
}

struct HttpService::Impl {
    RegistryStore& store;
    std::function<uint64_t()> clock_ms;
    httplib::Server server;
    std::thread worker;

    Impl(RegistryStore& s, std::function<uint64_t()> clock)
        : store(s), clock_ms(std::move(clock)) {
        register_routes();
    }

    void register_routes() {
        server.Put(R"(/devices/([0-9a-fA-F]{32}))",
                   [this](const httplib::Request& req, httplib::Response& res) {
                       RegistryRecord rec;
                       try {
                           rec = record_from(nlohmann::json::parse(req.body));
                           if (device_id_to_hex(rec.device_id) != req.matches[1].str())
                               throw std::invalid_argument("id mismatch");
                       } catch (const std::exception& e) {
                           res.status = kBadRequest;
                           res.set_content(std::string("{\"error\":\"bad record\"}"),
                                           "application/json");
                           return;
                       }
                       res.status = store.put_device(bearer_token(req), rec, clock_ms());
                       res.set_content("{}", "application/json");
                   });
        server.Get(R"(/devices/([0-9a-fA-F]{32}))",
                   [this](const httplib::Request& req, httplib::Response& res) {
                       auto [code, rec] =
                           store.get_device(device_id_from_hex(req.matches[1].str()));
                       res.status = code;
                       res.set_content(rec ? record_json(*rec).dump() : "{}",
                                       "application/json");
                   });
        server.Delete(R"(/devices/([0-9a-fA-F]{32}))",
                      [this](const httplib::Request& req, httplib::Response& res) {
                          res.status = store.delete_device(
                              bearer_token(req), device_id_from_hex(req.matches[1].str()));
                          res.set_content("{}", "application/json");
                      });
        server.Get("/devices", [this](const httplib::Request& req, httplib::Response& res) {
            double x, y, radius;
            try {
                x = std::stod(req.get_param_value("x"));
                y = std::stod(req.get_param_value("y"));
                radius = std::stod(req.get_param_value("radius"));
            } catch (const std::exception&) {
                res.status = kBadRequest;
                res.set_content("{\"error\":\"bad query\"}", "application/json");
                return;
            }
            auto [code, records] = store.nearby(x, y, radius);
            res.status = code;
            auto body = nlohmann::json::array();
            for (const auto& rec : records) body.push_back(record_json(rec));
            res.set_content(body.dump(), "application/json");
        });
        server.Post("/consents", [this](const httplib::Request& req, httplib::Response& res) {
            ConsentRecord rec;
            try {
                rec = consent_from(nlohmann::json::parse(req.body));
            } catch (const std::exception&) {
                res.status = kBadRequest;
                res.set_content("{\"error\":\"bad consent\"}", "application/json");
                return;
            }
            res.status = store.post_consent(bearer_token(req), rec, clock_ms());
            res.set_content("{}", "application/json");
        });
        server.Get("/consents", [this](const httplib::Request& req, httplib::Response& res) {
            DeviceId id;
            uint64_t since = 0;
            try {
                id = device_id_from_hex(req.get_param_value("device_id"));
                if (req.has_param("since"))
                    since = std::stoull(req.get_param_value("since"));
            } catch (const std::exception&) {
                res.status = kBadRequest;
                res.set_content("{\"error\":\"bad query\"}", "application/json");
                return;
            }
            auto [code, records] = store.get_consents(bearer_token(req), id, since);
            res.status = code;
            auto body = nlohmann::json::array();
            for (const auto& rec : records) body.push_back(consent_json(rec));
            res.set_content(body.dump(), "application/json");
        });
    }
};

HttpService::HttpService(RegistryStore& store, std::function<uint64_t()> clock_ms)
    : impl_(std::make_unique<Impl>(store, std::move(clock_ms))) {}

HttpService::~HttpService() { stop(); }

int HttpService::start(const std::string& host) {
    int port = impl_->server.bind_to_any_port(host);
    if (port <= 0) return 0;
    impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port;
}

bool HttpService::serve(const std::string& host, int port) {
    return impl_->server.listen(host, port);
}

void HttpService::stop() {
    impl_->server.stop();
    if (impl_->worker.joinable()) impl_->worker.join();
}

struct HttpClient::Impl {
    httplib::Client client;
    std::string token;

    Impl(const std::string& host, int port, std::string tok)
        : client(host, port), token(std::move(tok)) {
        client.set_connection_timeout(2, 0);
    }

    httplib::Headers headers() const { return {{"Authorization", "Bearer " + token}}; }
};

HttpClient::HttpClient(std::string host, int port, std::string token)
    : impl_(std::make_unique<Impl>(host, port, std::move(token))) {}

HttpClient::~HttpClient() = default;

int HttpClient::put_device(const RegistryRecord& rec) {
    auto res = impl_->client.Put("/devices/" + device_id_to_hex(rec.device_id),
                                 impl_->headers(), record_json(rec).dump(),
                                 "application/json");
    return res ? res->status : 0;
}

std::pair<int, std::optional<RegistryRecord>> HttpClient::get_device(const DeviceId& id) {
    auto res = impl_->client.Get("/devices/" + device_id_to_hex(id), impl_->headers());
    if (!res) return {0, std::nullopt};
    if (res->status != kOk) return {res->status, std::nullopt};
    return {kOk, record_from(nlohmann::json::parse(res->body))};
}

int HttpClient::delete_device(const DeviceId& id) {
    auto res = impl_->client.Delete("/devices/" + device_id_to_hex(id), impl_->headers());
    return res ? res->status : 0;
}

std::optional<std::vector<RegistryRecord>> HttpClient::nearby(double x_m, double y_m,
                                                              double radius_m) {
    httplib::Params params{{"x", std::to_string(x_m)},
                           {"y", std::to_string(y_m)},
                           {"radius", std::to_string(radius_m)}};
    auto res = impl_->client.Get("/devices", params, impl_->headers());
    if (!res || res->status != kOk) return std::nullopt;
    std::vector<RegistryRecord> out;
    for (const auto& j : nlohmann::json::parse(res->body)) out.push_back(record_from(j));
    return out;
}

int HttpClient::post_consent(const ConsentRecord& rec) {
    auto res = impl_->client.Post("/consents", impl_->headers(), consent_json(rec).dump(),
                                  "application/json");
    return res ? res->status : 0;
}

std::pair<int, std::vector<ConsentRecord>> HttpClient::get_consents(const DeviceId& id,
                                                                    uint64_t since_ms) {
    httplib::Params params{{"device_id", device_id_to_hex(id)},
                           {"since", std::to_string(since_ms)}};
    auto res = impl_->client.Get("/consents", params, impl_->headers());
    if (!res) return {0, {}};
    if (res->status != kOk) return {res->status, {}};
    std::vector<ConsentRecord> out;
    for (const auto& j : nlohmann::json::parse(res->body)) out.push_back(consent_from(j));
    return {res->status, out};
}

}  // namespace icf::registry
