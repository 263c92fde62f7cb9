#include "icf/state.hpp"

#include <cmath>
#include <stdexcept>

#include "icf/json_io.hpp"

namespace icf {

Position Position::from_meters(double x, double y) {
    return {static_cast<int32_t>(std::llround(x * 100.0)),
            static_cast<int32_t>(std::llround(y * 100.0))};
}

Range Range::from_meters(double r) {
    if (r < 0) throw std::invalid_argument("negative range");
    return {static_cast<uint16_t>(std::llround(r * 10.0))};
}

bool within(const Position& pos, const Position& center, const Range& range) {
    int64_t dx = int64_t(pos.x_cm) - int64_t(center.x_cm);
    int64_t dy = int64_t(pos.y_cm) - int64_t(center.y_cm);
    int64_t r_cm = int64_t(range.r_dm) * 10;
    return dx * dx + dy * dy <= r_cm * r_cm;
}

std::vector<SubjectId> subjects_in_range(const SystemState& st, const Position& center,
                                         const Range& range) {
    std::vector<SubjectId> out;
    for (const auto& [sid, pos] : st.position) {
        if (within(pos, center, range)) out.push_back(sid);
    }
    return out;
}

std::string to_hex(const Bytes& b) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(b.size() * 2);
    for (uint8_t c : b) {
        out.push_back(digits[c >> 4]);
        out.push_back(digits[c & 0x0F]);
    }
    return out;
}

Bytes from_hex(const std::string& s) {
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw std::invalid_argument("bad hex digit");
    };
    if (s.size() % 2 != 0) throw std::invalid_argument("odd hex length");
    Bytes out;
    out.reserve(s.size() / 2);
    for (size_t i = 0; i < s.size(); i += 2) {
        out.push_back(static_cast<uint8_t>(nibble(s[i]) << 4 | nibble(s[i + 1])));
    }
    return out;
}

std::string device_id_to_hex(const DeviceId& id) {
    return to_hex(Bytes(id.begin(), id.end()));
}

DeviceId device_id_from_hex(const std::string& s) {
    Bytes b = from_hex(s);
    if (b.size() != 16) throw std::invalid_argument("device id must be 16 octets");
    DeviceId id{};
    std::copy(b.begin(), b.end(), id.begin());
    return id;
}

std::string data_type_name(DataType t) {
    switch (t) {
        case DataType::MacAddress: return "MAC_ADDRESS";
        case DataType::PlateNumber: return "PLATE_NUMBER";
        case DataType::Image: return "IMAGE";
        case DataType::Sound: return "SOUND";
        case DataType::Presence: return "PRESENCE";
    }
    throw std::invalid_argument("bad data type");
}

DataType data_type_from_name(const std::string& name) {
    if (name == "MAC_ADDRESS") return DataType::MacAddress;
    if (name == "PLATE_NUMBER") return DataType::PlateNumber;
    if (name == "IMAGE") return DataType::Image;
    if (name == "SOUND") return DataType::Sound;
    if (name == "PRESENCE") return DataType::Presence;
    throw std::invalid_argument("bad data type name: " + name);
}

std::string state_to_json(const SystemState& st) {
    nlohmann::json j;
    j["config"] = nlohmann::json::array();
    for (const auto& [id, info] : st.config) {
        j["config"].push_back({{"device_id", device_id_to_hex(id)}, {"info", info}});
    }
    j["declared"] = nlohmann::json::array();
    for (const auto& [id, info] : st.declared) {
        j["declared"].push_back({{"device_id", device_id_to_hex(id)}, {"info", info}});
    }
    j["knows"] = nlohmann::json::array();
    for (const auto& [k, info] : st.knows) {
        j["knows"].push_back({{"subject", k.subject},
                              {"device_id", device_id_to_hex(k.device)},
                              {"info", info}});
    }
    j["position"] = nlohmann::json::array();
    for (const auto& [sid, pos] : st.position) {
        j["position"].push_back({{"subject", sid}, {"x_cm", pos.x_cm}, {"y_cm", pos.y_cm}});
    }
    j["paired"] = nlohmann::json::array();
    for (const auto& [a, b] : st.paired) {
        j["paired"].push_back({{"subject", a}, {"host", b}});
    }
    j["store_c"] = nlohmann::json::array();
    for (const auto& [k, e] : st.store_c) {
        j["store_c"].push_back({{"device_id", device_id_to_hex(k.device)},
                                {"subject", k.subject},
                                {"data_type", data_type_name(k.data_type)},
                                {"policy", maybe_policy_to_json(e.policy)},
                                {"value", maybe_value_to_json(e.value)},
                                {"collected_at_ms", e.collected_at_ms}});
    }
    j["store_s"] = nlohmann::json::array();
    for (const auto& [k, e] : st.store_s) {
        j["store_s"].push_back({{"subject", k.subject},
                                {"data_type", data_type_name(k.data_type)},
                                {"policy", maybe_policy_to_json(e.policy)},
                                {"value", maybe_value_to_json(e.value)}});
    }
    return j.dump();
}

SystemState state_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    SystemState st;
    for (const auto& e : j.at("config")) {
        st.config[device_id_from_hex(e.at("device_id"))] = e.at("info").get<DeviceInfo>();
    }
    for (const auto& e : j.at("declared")) {
        st.declared[device_id_from_hex(e.at("device_id"))] = e.at("info").get<DeviceInfo>();
    }
    for (const auto& e : j.at("knows")) {
        KnowsKey k{e.at("subject").get<SubjectId>(), device_id_from_hex(e.at("device_id"))};
        st.knows[k] = e.at("info").get<DeviceInfo>();
    }
    for (const auto& e : j.at("position")) {
        st.position[e.at("subject").get<SubjectId>()] =
            Position{e.at("x_cm").get<int32_t>(), e.at("y_cm").get<int32_t>()};
    }
    for (const auto& e : j.at("paired")) {
        st.paired[e.at("subject").get<SubjectId>()] = e.at("host").get<SubjectId>();
    }
    for (const auto& e : j.at("store_c")) {
        StoreCKey k{device_id_from_hex(e.at("device_id")), e.at("subject").get<SubjectId>(),
                    data_type_from_name(e.at("data_type"))};
        st.store_c[k] = ControllerEntry{maybe_policy_from_json(e.at("policy")),
                                        maybe_value_from_json(e.at("value")),
                                        e.at("collected_at_ms").get<uint64_t>()};
    }
    for (const auto& e : j.at("store_s")) {
        StoreSKey k{e.at("subject").get<SubjectId>(), data_type_from_name(e.at("data_type"))};
        st.store_s[k] = StoredPair{maybe_policy_from_json(e.at("policy")),
                                   maybe_value_from_json(e.at("value"))};
    }
    return st;
}

}  // namespace icf
