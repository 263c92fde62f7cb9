#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "icf/consent.hpp"
#include "icf/state.hpp"

namespace icf::beacon {

constexpr size_t kMaxFrameOctets = 31;   // legacy advertisement budget
constexpr size_t kFragmentPayload = 21;  // kMaxFrameOctets minus the 10-octet header
constexpr uint64_t kDefaultIntervalMs = 250;

enum class ConsentStatus : uint8_t {
    Accepted = 0x00,
    RejectedNoncompliant = 0x01,
    Malformed = 0x02,
};

struct AdvertisementFragment {
    uint32_t declaration_id = 0;  // content-version handle
    uint8_t frag_index = 0;
    uint8_t frag_count = 1;
    Bytes payload;

    bool operator==(const AdvertisementFragment&) const = default;
};

struct ConsentFrame {
    DeviceId device_id{};
    SubjectId subject;
    uint64_t timestamp_ms = 0;
    std::array<uint8_t, 8> nonce{};
    Policy policy;

    bool operator==(const ConsentFrame&) const = default;
};

// Wire codecs. Frame layouts are bit-exact (golden vectors in the tests).
Bytes encode_fragment(const AdvertisementFragment& f);
AdvertisementFragment decode_fragment(const Bytes& frame);
Bytes encode_consent_frame(const ConsentFrame& f);
ConsentFrame decode_consent_frame(const Bytes& frame);

Bytes encode_declaration_payload(const Declaration& d);
Declaration decode_declaration_payload(const Bytes& payload);

uint32_t declaration_content_id(const Declaration& d);

// Splits a declaration into broadcast fragments sharing one declaration id.
std::vector<AdvertisementFragment> encode_declaration(const Declaration& d);

// Incremental reassembly keyed by declaration id. Completed ids are
// remembered so an unchanged declaration is delivered once.
class Reassembler {
public:
    // Returns the declaration once a consistent complete set is held;
    // nullopt means more fragments are needed.
    std::optional<Declaration> add(const AdvertisementFragment& f);

private:
    struct Partial {
        uint8_t frag_count = 0;
        std::map<uint8_t, Bytes> payloads;
    };
    std::map<uint32_t, Partial> partials_;
    std::set<uint32_t> completed_;
};

class RadioBus;

// Emulated advertising endpoint. Broadcasts one fragment per interval,
// round-robin, to scanners inside the declared range (plus an optional
// margin for the declaration zone).
class BeaconEndpoint {
public:
    BeaconEndpoint(Declaration decl, uint64_t interval_ms = kDefaultIntervalMs,
                   double range_margin_m = 0.0);

    void set_declaration(Declaration decl);
    const Declaration& declaration() const { return decl_; }
    Range advertising_range() const;

    // Emits every fragment due at or before `now`.
    void tick(uint64_t now_ms, RadioBus& bus);

    // ATT-style consent write. Validates the frame, checks the DC policy
    // against the consent bound, stores a receipt and queues the consent.
    ConsentStatus handle_consent_write(const Bytes& frame_bytes, uint64_t now_ms);

    const std::vector<ConsentReceipt>& receipts() const { return receipts_; }
    std::vector<ConsentFrame> take_accepted_consents();

private:
    Declaration decl_;
    std::vector<AdvertisementFragment> fragments_;
    uint64_t interval_ms_;
    double range_margin_m_;
    size_t next_fragment_ = 0;
    std::optional<uint64_t> last_emit_ms_;
    std::vector<ConsentReceipt> receipts_;
    std::vector<ConsentFrame> accepted_;
};

// In-memory broadcast medium gated by geometric range. Delivery is
// instant and lossless unless a drop probability is configured.
class RadioBus {
public:
    explicit RadioBus(uint64_t seed = 0, double drop_probability = 0.0);

    int add_scanner(Position pos);
    void move_scanner(int scanner, Position pos);
    Position scanner_position(int scanner) const;

    void broadcast(Position origin, Range range, const Bytes& frame);
    std::vector<Bytes> take_inbox(int scanner);

    // Connection-oriented write towards a beacon; nullopt models the
    // caller timing out when out of the advertising range.
    std::optional<ConsentStatus> write_consent(BeaconEndpoint& target, Position writer,
                                               const Bytes& frame_bytes, uint64_t now_ms);

    size_t frames_broadcast() const { return frames_broadcast_; }

private:
    struct Scanner {
        Position pos;
        std::deque<Bytes> inbox;
    };
    std::map<int, Scanner> scanners_;
    int next_id_ = 0;
    size_t frames_broadcast_ = 0;
    double drop_probability_;
    std::mt19937_64 rng_;
};

// Scanner-side cache: feeds received frames to the reassembler and
// reports newly completed declarations.
class ScannerEndpoint {
public:
    explicit ScannerEndpoint(RadioBus& bus, Position pos);

    void move(Position pos);
    Position position() const;

    // Drains the inbox; returns declarations completed by these frames.
    std::vector<Declaration> poll();

    int id() const { return id_; }

private:
    RadioBus& bus_;
    int id_;
    Reassembler reassembler_;
};

}  // namespace icf::beacon
