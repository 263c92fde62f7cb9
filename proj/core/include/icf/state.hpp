#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "icf/policy.hpp"

namespace icf {

// Planar position in signed centimeters.
struct Position {
    int32_t x_cm = 0;
    int32_t y_cm = 0;

    static Position from_meters(double x, double y);
    double x_m() const { return x_cm / 100.0; }
    double y_m() const { return y_cm / 100.0; }

    bool operator==(const Position&) const = default;
    auto operator<=>(const Position&) const = default;
};

// Collection range in decimeters (0.1 m resolution).
struct Range {
    uint16_t r_dm = 0;

    static Range from_meters(double r);
    double meters() const { return r_dm / 10.0; }

    bool operator==(const Range&) const = default;
    auto operator<=>(const Range&) const = default;
};

enum class DataType : uint8_t {
    MacAddress = 0x01,
    PlateNumber = 0x02,
    Image = 0x03,
    Sound = 0x04,
    Presence = 0x05,
};

using DeviceId = std::array<uint8_t, 16>;

// A DS device identifier: an identifier kind plus its value
// (MAC address octets, plate number text, ...).
struct SubjectId {
    DataType kind = DataType::MacAddress;
    Bytes value;

    bool operator==(const SubjectId&) const = default;
    auto operator<=>(const SubjectId&) const = default;
};

// The (position, range, data type, policy) tuple shared by Config,
// Declared and Knows entries.
struct DeviceInfo {
    Position position;
    Range range;
    DataType data_type = DataType::MacAddress;
    Policy policy;

    bool operator==(const DeviceInfo&) const = default;
    auto operator<=>(const DeviceInfo&) const = default;
};

// A declaration as advertised to subjects: device identity plus its tuple.
struct Declaration {
    DeviceId device_id{};
    Position position;
    Range range;
    DataType data_type = DataType::MacAddress;
    Policy policy;

    DeviceInfo info() const { return {position, range, data_type, policy}; }

    bool operator==(const Declaration&) const = default;
    auto operator<=>(const Declaration&) const = default;
};

// A (policy, value) pair held by a controller or subject store.
// Either half may be undefined.
struct StoredPair {
    MaybePolicy policy;
    MaybeValue value;

    bool operator==(const StoredPair&) const = default;
};

// A controller-side stored pair plus the timestamp of the collect that
// last wrote it (drives retention sweeps).
struct ControllerEntry {
    MaybePolicy policy;
    MaybeValue value;
    uint64_t collected_at_ms = 0;

    StoredPair pair() const { return {policy, value}; }
    bool operator==(const ControllerEntry&) const = default;
};

struct KnowsKey {
    SubjectId subject;
    DeviceId device{};
    auto operator<=>(const KnowsKey&) const = default;
};

struct StoreCKey {
    DeviceId device{};
    SubjectId subject;
    DataType data_type = DataType::MacAddress;
    auto operator<=>(const StoreCKey&) const = default;
};

struct StoreSKey {
    SubjectId subject;
    DataType data_type = DataType::MacAddress;
    auto operator<=>(const StoreSKey&) const = default;
};

struct SystemState {
    std::map<DeviceId, DeviceInfo> config;
    std::map<DeviceId, DeviceInfo> declared;
    std::map<KnowsKey, DeviceInfo> knows;
    std::map<SubjectId, Position> position;
    std::map<SubjectId, SubjectId> paired;  // absent entry means paired to itself
    std::map<StoreCKey, ControllerEntry> store_c;
    std::map<StoreSKey, StoredPair> store_s;

    SubjectId paired_of(const SubjectId& s) const {
        auto it = paired.find(s);
        return it == paired.end() ? s : it->second;
    }

    // Absent entries read as (undefined, undefined).
    StoredPair store_c_pair(const StoreCKey& k) const {
        auto it = store_c.find(k);
        return it == store_c.end() ? StoredPair{} : it->second.pair();
    }
    StoredPair store_s_pair(const StoreSKey& k) const {
        auto it = store_s.find(k);
        return it == store_s.end() ? StoredPair{} : it->second;
    }

    bool operator==(const SystemState&) const = default;
};

// True iff pos lies within `range` of `center`, boundary inclusive.
// Exact integer arithmetic, no floating point.
bool within(const Position& pos, const Position& center, const Range& range);

// All positioned subjects within range of center.
std::vector<SubjectId> subjects_in_range(const SystemState& st, const Position& center,
                                         const Range& range);

// JSON snapshot, field names mirror the map names.
std::string state_to_json(const SystemState& st);
SystemState state_from_json(const std::string& text);

std::string to_hex(const Bytes& b);
Bytes from_hex(const std::string& s);
std::string device_id_to_hex(const DeviceId& id);
DeviceId device_id_from_hex(const std::string& s);

std::string data_type_name(DataType t);
DataType data_type_from_name(const std::string& name);

}  // namespace icf
