#include "icf/policy.hpp"

#include <algorithm>
#include <sstream>

namespace icf {

namespace {

constexpr uint8_t kTagControllerId = 0x10;
constexpr uint8_t kTagCategory = 0x11;
constexpr uint8_t kTagPurposes = 0x12;
constexpr uint8_t kTagRetention = 0x13;
constexpr uint8_t kTagRecipients = 0x14;
constexpr uint8_t kTagCrossBorder = 0x15;

void put_tlv(Bytes& out, uint8_t tag, const Bytes& value) {
    if (value.size() > 0xFF) throw MalformedTlvError("TLV value too long");
    out.push_back(tag);
    out.push_back(static_cast<uint8_t>(value.size()));
    out.insert(out.end(), value.begin(), value.end());
}

bool valid_category(uint8_t c) { return c >= 0x01 && c <= 0x05; }
bool valid_purpose(uint8_t c) { return c >= 0x01 && c <= 0x05; }
bool valid_recipient(uint8_t c) { return c >= 0x01 && c <= 0x03; }

}  // namespace

bool implies(const Policy& p1, const Policy& p2) {
    if (!std::includes(p2.purposes.begin(), p2.purposes.end(), p1.purposes.begin(),
                       p1.purposes.end()))
        return false;
    if (p1.retention_seconds > p2.retention_seconds) return false;
    if (!std::includes(p2.recipients.begin(), p2.recipients.end(), p1.recipients.begin(),
                       p1.recipients.end()))
        return false;
    if (p1.cross_border && !p2.cross_border) return false;
    if (p2.controller_category != ControllerCategory::Other &&
        p2.controller_category != p1.controller_category)
        return false;
    if (!p2.controller_id.empty() && p2.controller_id != p1.controller_id) return false;
    return true;
}

bool implies(const MaybePolicy& p1, const MaybePolicy& p2) {
    if (!p1 || !p2) throw UndefinedOperandError("implies: undefined policy operand");
    return implies(*p1, *p2);
}

Bytes encode_policy(const Policy& p) {
    if (p.controller_id.size() > 32) throw MalformedTlvError("controller_id exceeds 32 octets");
    Bytes out;
    if (!p.controller_id.empty()) {
        put_tlv(out, kTagControllerId,
                Bytes(p.controller_id.begin(), p.controller_id.end()));
    }
    put_tlv(out, kTagCategory, {static_cast<uint8_t>(p.controller_category)});
    Bytes purposes;
    for (Purpose pc : p.purposes) purposes.push_back(static_cast<uint8_t>(pc));
    put_tlv(out, kTagPurposes, purposes);
    uint32_t r = p.retention_seconds;
    put_tlv(out, kTagRetention,
            {static_cast<uint8_t>(r >> 24), static_cast<uint8_t>(r >> 16),
             static_cast<uint8_t>(r >> 8), static_cast<uint8_t>(r)});
    Bytes recipients;
    for (Recipient rc : p.recipients) recipients.push_back(static_cast<uint8_t>(rc));
    put_tlv(out, kTagRecipients, recipients);
    put_tlv(out, kTagCrossBorder, {static_cast<uint8_t>(p.cross_border ? 0x01 : 0x00)});
    return out;
}

Policy decode_policy(const Bytes& bytes) {
    Policy p;
    size_t i = 0;
    int last_tag = -1;
    bool seen[6] = {false, false, false, false, false, false};
    while (i < bytes.size()) {
        if (i + 2 > bytes.size()) throw MalformedTlvError("truncated TLV header");
        uint8_t tag = bytes[i];
        uint8_t len = bytes[i + 1];
        i += 2;
        if (i + len > bytes.size()) throw MalformedTlvError("truncated TLV value");
        if (tag < kTagControllerId || tag > kTagCrossBorder)
            throw MalformedTlvError("unknown tag");
        if (static_cast<int>(tag) <= last_tag)
            throw MalformedTlvError("tags not in canonical ascending order");
        last_tag = tag;
        seen[tag - kTagControllerId] = true;
        const uint8_t* v = bytes.data() + i;
        switch (tag) {
            case kTagControllerId:
                if (len > 32) throw MalformedTlvError("controller_id exceeds 32 octets");
                p.controller_id.assign(v, v + len);
                break;
            case kTagCategory:
                if (len != 1 || !valid_category(v[0]))
                    throw MalformedTlvError("bad controller_category");
                p.controller_category = static_cast<ControllerCategory>(v[0]);
                break;
            case kTagPurposes:
                for (uint8_t k = 0; k < len; ++k) {
                    if (!valid_purpose(v[k])) throw MalformedTlvError("bad purpose code");
                    if (k > 0 && v[k] <= v[k - 1])
                        throw MalformedTlvError("purposes not sorted ascending");
                    p.purposes.insert(static_cast<Purpose>(v[k]));
                }
                break;
            case kTagRetention:
                if (len != 4) throw MalformedTlvError("bad retention length");
                p.retention_seconds = (uint32_t(v[0]) << 24) | (uint32_t(v[1]) << 16) |
                                      (uint32_t(v[2]) << 8) | uint32_t(v[3]);
                break;
            case kTagRecipients:
                for (uint8_t k = 0; k < len; ++k) {
                    if (!valid_recipient(v[k])) throw MalformedTlvError("bad recipient code");
                    if (k > 0 && v[k] <= v[k - 1])
                        throw MalformedTlvError("recipients not sorted ascending");
                    p.recipients.insert(static_cast<Recipient>(v[k]));
                }
                break;
            case kTagCrossBorder:
                if (len != 1 || v[0] > 0x01) throw MalformedTlvError("bad cross_border value");
                p.cross_border = v[0] == 0x01;
                break;
        }
        i += len;
    }
    for (int t = 1; t < 6; ++t) {
        if (!seen[t]) throw MalformedTlvError("missing mandatory tag");
    }
    return p;
}

std::string display_name(ControllerCategory c) {
    switch (c) {
        case ControllerCategory::Museum: return "museum";
        case ControllerCategory::Retail: return "retail business";
        case ControllerCategory::RoadOperator: return "road operator";
        case ControllerCategory::Employer: return "employer";
        case ControllerCategory::Other: return "other organization";
    }
    return "unknown";
}

std::string display_name(Purpose p) {
    switch (p) {
        case Purpose::CountingVisitors: return "counting visitors";
        case Purpose::Billing: return "billing";
        case Purpose::Profiling: return "profiling";
        case Purpose::Security: return "security";
        case Purpose::Analytics: return "analytics";
    }
    return "unknown";
}

std::string display_name(Recipient r) {
    switch (r) {
        case Recipient::ControllerOnly: return "the controller only";
        case Recipient::Partners: return "the controller and its partners";
        case Recipient::Public: return "the public";
    }
    return "unknown";
}

std::string render_policy(const Policy& p) {
    std::ostringstream out;
    if (p.controller_id.empty()) {
        out << "The controller is not named. ";
    } else {
        out << "The controller is \"" << p.controller_id << "\". ";
    }
    out << "It is a " << display_name(p.controller_category) << ". ";
    out << "Data is used for ";
    bool first = true;
    for (Purpose pc : p.purposes) {
        if (!first) out << ", ";
        out << display_name(pc);
        first = false;
    }
    if (first) out << "no stated purpose";
    out << ". ";
    if (p.retention_seconds == 0) {
        out << "Data is deleted immediately. ";
    } else {
        out << "Data is kept for " << p.retention_seconds << " seconds. ";
    }
    out << "Data is shared with ";
    first = true;
    for (Recipient rc : p.recipients) {
        if (!first) out << ", ";
        out << display_name(rc);
        first = false;
    }
    if (first) out << "nobody";
    out << ". ";
    if (p.cross_border) {
        out << "Data may be transferred outside the jurisdiction.";
    } else {
        out << "Data stays inside the jurisdiction.";
    }
    return out.str();
}

}  // namespace icf
