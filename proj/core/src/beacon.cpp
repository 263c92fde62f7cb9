#include "icf/beacon.hpp"

#include <algorithm>
#include <cmath>

namespace icf::beacon {

namespace {

constexpr uint8_t kAdvMagic0 = 0x50;
constexpr uint8_t kAdvMagic1 = 0x42;
constexpr uint8_t kConsentMagic0 = 0x50;
constexpr uint8_t kConsentMagic1 = 0x43;
constexpr uint8_t kVersion = 0x01;

constexpr uint8_t kTagDeviceId = 0x01;
constexpr uint8_t kTagPosition = 0x02;
constexpr uint8_t kTagRange = 0x03;
constexpr uint8_t kTagDataType = 0x04;
constexpr uint8_t kTagPolicy = 0x05;

void put_u16(Bytes& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

void put_u32(Bytes& out, uint32_t v) {
    put_u16(out, static_cast<uint16_t>(v >> 16));
    put_u16(out, static_cast<uint16_t>(v));
}

void put_u64(Bytes& out, uint64_t v) {
    put_u32(out, static_cast<uint32_t>(v >> 32));
    put_u32(out, static_cast<uint32_t>(v));
}

uint16_t get_u16(const uint8_t* p) { return uint16_t(p[0]) << 8 | p[1]; }
uint32_t get_u32(const uint8_t* p) { return uint32_t(get_u16(p)) << 16 | get_u16(p + 2); }
uint64_t get_u64(const uint8_t* p) { return uint64_t(get_u32(p)) << 32 | get_u32(p + 4); }

void put_tlv(Bytes& out, uint8_t tag, const Bytes& value) {
    if (value.size() > 0xFF) throw MalformedTlvError("declaration TLV value too long");
    out.push_back(tag);
    out.push_back(static_cast<uint8_t>(value.size()));
    out.insert(out.end(), value.begin(), value.end());
}

}  // namespace

Bytes encode_fragment(const AdvertisementFragment& f) {
    if (f.payload.size() > kFragmentPayload)
        throw MalformedTlvError("fragment payload exceeds 21 octets");
    if (f.frag_count == 0 || f.frag_index >= f.frag_count)
        throw MalformedTlvError("bad fragment index/count");
    Bytes out{kAdvMagic0, kAdvMagic1, kVersion};
    put_u32(out, f.declaration_id);
    out.push_back(f.frag_index);
    out.push_back(f.frag_count);
    out.push_back(static_cast<uint8_t>(f.payload.size()));
    out.insert(out.end(), f.payload.begin(), f.payload.end());
    return out;
}

AdvertisementFragment decode_fragment(const Bytes& frame) {
    if (frame.size() < 10) throw MalformedTlvError("fragment frame too short");
    if (frame.size() > kMaxFrameOctets) throw MalformedTlvError("fragment frame too long");
    if (frame[0] != kAdvMagic0 || frame[1] != kAdvMagic1)
        throw MalformedTlvError("bad advertisement magic");
    if (frame[2] != kVersion) throw MalformedTlvError("unsupported version");
    AdvertisementFragment f;
    f.declaration_id = get_u32(frame.data() + 3);
    f.frag_index = frame[7];
    f.frag_count = frame[8];
    uint8_t len = frame[9];
    if (f.frag_count == 0 || f.frag_index >= f.frag_count)
        throw MalformedTlvError("bad fragment index/count");
    if (len > kFragmentPayload || frame.size() != size_t(10) + len)
        throw MalformedTlvError("bad fragment payload length");
    f.payload.assign(frame.begin() + 10, frame.end());
    return f;
}

Bytes encode_declaration_payload(const Declaration& d) {
    Bytes out;
    put_tlv(out, kTagDeviceId, Bytes(d.device_id.begin(), d.device_id.end()));
    Bytes pos;
    put_u32(pos, static_cast<uint32_t>(d.position.x_cm));
    put_u32(pos, static_cast<uint32_t>(d.position.y_cm));
    put_tlv(out, kTagPosition, pos);
    Bytes rng;
    put_u16(rng, d.range.r_dm);
    put_tlv(out, kTagRange, rng);
    put_tlv(out, kTagDataType, {static_cast<uint8_t>(d.data_type)});
    put_tlv(out, kTagPolicy, encode_policy(d.policy));
    return out;
}

Declaration decode_declaration_payload(const Bytes& payload) {
    Declaration d;
    size_t i = 0;
    int last_tag = 0;
    bool seen[6] = {};
    while (i < payload.size()) {
        if (i + 2 > payload.size()) throw MalformedTlvError("truncated declaration TLV");
        uint8_t tag = payload[i];
        uint8_t len = payload[i + 1];
        i += 2;
        if (i + len > payload.size()) throw MalformedTlvError("truncated declaration value");
        if (tag < kTagDeviceId || tag > kTagPolicy)
            throw MalformedTlvError("unknown declaration tag");
        if (static_cast<int>(tag) <= last_tag)
            throw MalformedTlvError("declaration tags out of order");
        last_tag = tag;
        seen[tag] = true;
        const uint8_t* v = payload.data() + i;
        switch (tag) {
            case kTagDeviceId:
                if (len != 16) throw MalformedTlvError("device id must be 16 octets");
                std::copy(v, v + 16, d.device_id.begin());
                break;
            case kTagPosition:
                if (len != 8) throw MalformedTlvError("position must be 8 octets");
                d.position.x_cm = static_cast<int32_t>(get_u32(v));
                d.position.y_cm = static_cast<int32_t>(get_u32(v + 4));
                break;
            case kTagRange:
                if (len != 2) throw MalformedTlvError("range must be 2 octets");
                d.range.r_dm = get_u16(v);
                break;
            case kTagDataType:
                if (len != 1 || v[0] < 0x01 || v[0] > 0x05)
                    throw MalformedTlvError("bad data type code");
                d.data_type = static_cast<DataType>(v[0]);
                break;
            case kTagPolicy:
                d.policy = decode_policy(Bytes(v, v + len));
                break;
        }
        i += len;
    }
    for (int t = kTagDeviceId; t <= kTagPolicy; ++t) {
        if (!seen[t]) throw MalformedTlvError("missing declaration tag");
    }
    return d;
}

uint32_t declaration_content_id(const Declaration& d) {
    // FNV-1a over the canonical payload
    Bytes payload = encode_declaration_payload(d);
    uint32_t h = 2166136261u;
    for (uint8_t b : payload) {
        h ^= b;
        h *= 16777619u;
    }
    return h;
}

std::vector<AdvertisementFragment> encode_declaration(const Declaration& d) {
    if (encode_policy(d.policy).size() > 255) throw MalformedTlvError("oversize policy");
    Bytes payload = encode_declaration_payload(d);
    uint32_t id = declaration_content_id(d);
    size_t count = (payload.size() + kFragmentPayload - 1) / kFragmentPayload;
    if (count == 0) count = 1;
    if (count > 0xFF) throw MalformedTlvError("declaration payload too large");
    std::vector<AdvertisementFragment> frags;
    for (size_t i = 0; i < count; ++i) {
        AdvertisementFragment f;
        f.declaration_id = id;
        f.frag_index = static_cast<uint8_t>(i);
        f.frag_count = static_cast<uint8_t>(count);
        size_t begin = i * kFragmentPayload;
        size_t end = std::min(begin + kFragmentPayload, payload.size());
        f.payload.assign(payload.begin() + begin, payload.begin() + end);
        frags.push_back(std::move(f));
    }
    return frags;
}

std::optional<Declaration> Reassembler::add(const AdvertisementFragment& f) {
    if (f.frag_count == 0 || f.frag_index >= f.frag_count)
        throw MalformedTlvError("bad fragment index/count");
    if (completed_.contains(f.declaration_id)) return std::nullopt;
    Partial& p = partials_[f.declaration_id];
    if (p.frag_count == 0) {
        p.frag_count = f.frag_count;
    } else if (p.frag_count != f.frag_count) {
        throw MalformedTlvError("inconsistent fragment count");
    }
    auto [it, inserted] = p.payloads.emplace(f.frag_index, f.payload);
    if (!inserted && it->second != f.payload)
        throw MalformedTlvError("conflicting duplicate fragment");
    if (p.payloads.size() < p.frag_count) return std::nullopt;
    Bytes payload;
    for (const auto& [idx, part] : p.payloads) {
        payload.insert(payload.end(), part.begin(), part.end());
    }
    Declaration d = decode_declaration_payload(payload);
    completed_.insert(f.declaration_id);
    partials_.erase(f.declaration_id);
    return d;
}

Bytes encode_consent_frame(const ConsentFrame& f) {
    if (f.subject.value.empty() || f.subject.value.size() > 32)
        throw MalformedTlvError("subject value must be 1..32 octets");
    Bytes out{kConsentMagic0, kConsentMagic1, kVersion};
    out.insert(out.end(), f.device_id.begin(), f.device_id.end());
    out.push_back(static_cast<uint8_t>(f.subject.kind));
    out.push_back(static_cast<uint8_t>(f.subject.value.size()));
    out.insert(out.end(), f.subject.value.begin(), f.subject.value.end());
    put_u64(out, f.timestamp_ms);
    out.insert(out.end(), f.nonce.begin(), f.nonce.end());
    Bytes policy = encode_policy(f.policy);
    out.insert(out.end(), policy.begin(), policy.end());
    return out;
}

ConsentFrame decode_consent_frame(const Bytes& frame) {
    if (frame.size() < 21) throw MalformedTlvError("consent frame too short");
    if (frame[0] != kConsentMagic0 || frame[1] != kConsentMagic1)
        throw MalformedTlvError("bad consent magic");
    if (frame[2] != kVersion) throw MalformedTlvError("unsupported version");
    ConsentFrame f;
    std::copy(frame.begin() + 3, frame.begin() + 19, f.device_id.begin());
    uint8_t kind = frame[19];
    if (kind < 0x01 || kind > 0x05) throw MalformedTlvError("bad subject kind");
    f.subject.kind = static_cast<DataType>(kind);
    uint8_t sub_len = frame[20];
    if (sub_len == 0 || sub_len > 32) throw MalformedTlvError("bad subject length");
    size_t i = 21;
    if (frame.size() < i + sub_len + 16) throw MalformedTlvError("consent frame truncated");
    f.subject.value.assign(frame.begin() + i, frame.begin() + i + sub_len);
    i += sub_len;
    f.timestamp_ms = get_u64(frame.data() + i);
    i += 8;
    std::copy(frame.begin() + i, frame.begin() + i + 8, f.nonce.begin());
    i += 8;
    f.policy = decode_policy(Bytes(frame.begin() + i, frame.end()));
    return f;
}

BeaconEndpoint::BeaconEndpoint(Declaration decl, uint64_t interval_ms, double range_margin_m)
    : decl_(std::move(decl)),
      interval_ms_(interval_ms == 0 ? kDefaultIntervalMs : interval_ms),
      range_margin_m_(range_margin_m) {
    fragments_ = encode_declaration(decl_);
}

void BeaconEndpoint::set_declaration(Declaration decl) {
    decl_ = std::move(decl);
    fragments_ = encode_declaration(decl_);
    next_fragment_ = 0;
}

Range BeaconEndpoint::advertising_range() const {
    double r = decl_.range.meters() + range_margin_m_;
    return Range::from_meters(r);
}

void BeaconEndpoint::tick(uint64_t now_ms, RadioBus& bus) {
    if (!last_emit_ms_) {
        // first fragment goes out immediately on activation
        bus.broadcast(decl_.position, advertising_range(),
                      encode_fragment(fragments_[next_fragment_]));
        next_fragment_ = (next_fragment_ + 1) % fragments_.size();
        last_emit_ms_ = now_ms;
    }
    while (*last_emit_ms_ + interval_ms_ <= now_ms) {
        *last_emit_ms_ += interval_ms_;
        bus.broadcast(decl_.position, advertising_range(),
                      encode_fragment(fragments_[next_fragment_]));
        next_fragment_ = (next_fragment_ + 1) % fragments_.size();
    }
}

ConsentStatus BeaconEndpoint::handle_consent_write(const Bytes& frame_bytes,
                                                   uint64_t now_ms) {
    ConsentFrame frame;
    try {
        frame = decode_consent_frame(frame_bytes);
    } catch (const MalformedTlvError&) {
        return ConsentStatus::Malformed;
    }
    if (frame.device_id != decl_.device_id) return ConsentStatus::Malformed;
    if (!implies(decl_.policy, frame.policy)) return ConsentStatus::RejectedNoncompliant;
    receipts_.push_back(
        {decl_.device_id, frame.subject, frame.policy, now_ms, "beacon"});
    accepted_.push_back(frame);
    return ConsentStatus::Accepted;
}

std::vector<ConsentFrame> BeaconEndpoint::take_accepted_consents() {
    std::vector<ConsentFrame> out;
    out.swap(accepted_);
    return out;
}

RadioBus::RadioBus(uint64_t seed, double drop_probability)
    : drop_probability_(drop_probability), rng_(seed) {}

int RadioBus::add_scanner(Position pos) {
    int id = next_id_++;
    scanners_[id] = Scanner{pos, {}};
    return id;
}

void RadioBus::move_scanner(int scanner, Position pos) {
    scanners_.at(scanner).pos = pos;
}

Position RadioBus::scanner_position(int scanner) const {
    return scanners_.at(scanner).pos;
}

void RadioBus::broadcast(Position origin, Range range, const Bytes& frame) {
    ++frames_broadcast_;
    for (auto& [id, sc] : scanners_) {
        if (!within(sc.pos, origin, range)) continue;
        if (drop_probability_ > 0.0) {
            std::uniform_real_distribution<double> dist(0.0, 1.0);
            if (dist(rng_) < drop_probability_) continue;
        }
        sc.inbox.push_back(frame);
    }
}

std::vector<Bytes> RadioBus::take_inbox(int scanner) {
    auto& sc = scanners_.at(scanner);
    std::vector<Bytes> out(sc.inbox.begin(), sc.inbox.end());
    sc.inbox.clear();
    return out;
}

std::optional<ConsentStatus> RadioBus::write_consent(BeaconEndpoint& target, Position writer,
                                                     const Bytes& frame_bytes,
                                                     uint64_t now_ms) {
    if (!within(writer, target.declaration().position, target.advertising_range()))
        return std::nullopt;  // no response, caller times out
    return target.handle_consent_write(frame_bytes, now_ms);
}

ScannerEndpoint::ScannerEndpoint(RadioBus& bus, Position pos)
    : bus_(bus), id_(bus.add_scanner(pos)) {}

void ScannerEndpoint::move(Position pos) { bus_.move_scanner(id_, pos); }

Position ScannerEndpoint::position() const { return bus_.scanner_position(id_); }

std::vector<Declaration> ScannerEndpoint::poll() {
    std::vector<Declaration> out;
    for (const Bytes& frame : bus_.take_inbox(id_)) {
        AdvertisementFragment frag;
        try {
            frag = decode_fragment(frame);
        } catch (const MalformedTlvError&) {
            continue;  // non-advertisement traffic is ignored
        }
        if (auto d = reassembler_.add(frag)) out.push_back(std::move(*d));
    }
    return out;
}

}  // namespace icf::beacon
