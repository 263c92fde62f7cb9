#include "icf/json_io.hpp"

#include <stdexcept>

namespace icf {

std::string category_name(ControllerCategory c) {
    switch (c) {
        case ControllerCategory::Museum: return "MUSEUM";
        case ControllerCategory::Retail: return "RETAIL";
        case ControllerCategory::RoadOperator: return "ROAD_OPERATOR";
        case ControllerCategory::Employer: return "EMPLOYER";
        case ControllerCategory::Other: return "OTHER";
    }
    throw std::invalid_argument("bad category");
}

ControllerCategory category_from_name(const std::string& s) {
    if (s == "MUSEUM") return ControllerCategory::Museum;
    if (s == "RETAIL") return ControllerCategory::Retail;
    if (s == "ROAD_OPERATOR") return ControllerCategory::RoadOperator;
    if (s == "EMPLOYER") return ControllerCategory::Employer;
    if (s == "OTHER") return ControllerCategory::Other;
    throw std::invalid_argument("bad category name: " + s);
}

std::string purpose_name(Purpose p) {
    switch (p) {
        case Purpose::CountingVisitors: return "COUNTING_VISITORS";
        case Purpose::Billing: return "BILLING";
        case Purpose::Profiling: return "PROFILING";
        case Purpose::Security: return "SECURITY";
        case Purpose::Analytics: return "ANALYTICS";
    }
    throw std::invalid_argument("bad purpose");
}

Purpose purpose_from_name(const std::string& s) {
    if (s == "COUNTING_VISITORS") return Purpose::CountingVisitors;
    if (s == "BILLING") return Purpose::Billing;
    if (s == "PROFILING") return Purpose::Profiling;
    if (s == "SECURITY") return Purpose::Security;
    if (s == "ANALYTICS") return Purpose::Analytics;
    throw std::invalid_argument("bad purpose name: " + s);
}

std::string recipient_name(Recipient r) {
    switch (r) {
        case Recipient::ControllerOnly: return "CONTROLLER_ONLY";
        case Recipient::Partners: return "PARTNERS";
        case Recipient::Public: return "PUBLIC";
    }
    throw std::invalid_argument("bad recipient");
}

Recipient recipient_from_name(const std::string& s) {
    if (s == "CONTROLLER_ONLY") return Recipient::ControllerOnly;
    if (s == "PARTNERS") return Recipient::Partners;
    if (s == "PUBLIC") return Recipient::Public;
    throw std::invalid_argument("bad recipient name: " + s);
}

void to_json(nlohmann::json& j, const Policy& p) {
    j = nlohmann::json::object();
    j["controller_id"] = p.controller_id;
    j["controller_category"] = category_name(p.controller_category);
    auto purposes = nlohmann::json::array();
    for (Purpose pc : p.purposes) purposes.push_back(purpose_name(pc));
    j["purposes"] = purposes;
    j["retention_seconds"] = p.retention_seconds;
    auto recipients = nlohmann::json::array();
    for (Recipient rc : p.recipients) recipients.push_back(recipient_name(rc));
    j["recipients"] = recipients;
    j["cross_border"] = p.cross_border;
}

void from_json(const nlohmann::json& j, Policy& p) {
    p = Policy{};
    p.controller_id = j.value("controller_id", std::string{});
    p.controller_category = category_from_name(j.at("controller_category"));
    for (const auto& s : j.at("purposes")) p.purposes.insert(purpose_from_name(s));
    p.retention_seconds = j.at("retention_seconds").get<uint32_t>();
    for (const auto& s : j.at("recipients")) p.recipients.insert(recipient_from_name(s));
    p.cross_border = j.value("cross_border", false);
}

void to_json(nlohmann::json& j, const SubjectId& s) {
    j = {{"kind", data_type_name(s.kind)}, {"value", to_hex(s.value)}};
}

void from_json(const nlohmann::json& j, SubjectId& s) {
    s.kind = data_type_from_name(j.at("kind"));
    s.value = from_hex(j.at("value"));
}

void to_json(nlohmann::json& j, const DeviceInfo& d) {
    j = {{"x_cm", d.position.x_cm},
         {"y_cm", d.position.y_cm},
         {"range_dm", d.range.r_dm},
         {"data_type", data_type_name(d.data_type)},
         {"policy", d.policy}};
}

void from_json(const nlohmann::json& j, DeviceInfo& d) {
    d.position = {j.at("x_cm").get<int32_t>(), j.at("y_cm").get<int32_t>()};
    d.range = {j.at("range_dm").get<uint16_t>()};
    d.data_type = data_type_from_name(j.at("data_type"));
    d.policy = j.at("policy").get<Policy>();
}

void to_json(nlohmann::json& j, const Declaration& d) {
    j = {{"device_id", device_id_to_hex(d.device_id)},
         {"x_cm", d.position.x_cm},
         {"y_cm", d.position.y_cm},
         {"range_dm", d.range.r_dm},
         {"data_type", data_type_name(d.data_type)},
         {"policy", d.policy}};
}

void from_json(const nlohmann::json& j, Declaration& d) {
    d.device_id = device_id_from_hex(j.at("device_id"));
    d.position = {j.at("x_cm").get<int32_t>(), j.at("y_cm").get<int32_t>()};
    d.range = {j.at("range_dm").get<uint16_t>()};
    d.data_type = data_type_from_name(j.at("data_type"));
    d.policy = j.at("policy").get<Policy>();
}

nlohmann::json maybe_policy_to_json(const MaybePolicy& p) {
    if (!p) return nullptr;
    return *p;
}

MaybePolicy maybe_policy_from_json(const nlohmann::json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<Policy>();
}

nlohmann::json maybe_value_to_json(const MaybeValue& v) {
    if (!v) return nullptr;
    return to_hex(*v);
}

MaybeValue maybe_value_from_json(const nlohmann::json& j) {
    if (j.is_null()) return std::nullopt;
    return from_hex(j.get<std::string>());
}

}  // namespace icf
