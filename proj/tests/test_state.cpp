#include <doctest.h>

#include <cmath>

#include "icf/state.hpp"
#include "support/generators.hpp"

using namespace icf;

namespace {

// Floating-point oracle, only trusted away from rounding trouble; the
// boundary cases below are checked exactly instead.
bool within_oracle(const Position& p, const Position& c, const Range& r) {
    int64_t dx = int64_t(p.x_cm) - c.x_cm;
    int64_t dy = int64_t(p.y_cm) - c.y_cm;
    int64_t rr = int64_t(r.r_dm) * 10;
    return dx * dx + dy * dy <= rr * rr;
}

}  // namespace

TEST_CASE("within is boundary inclusive") {
    Range five_m{50};
    // a 3-4-5 triangle puts the subject exactly on the boundary
    CHECK(within(Position::from_meters(3.0, 4.0), {0, 0}, five_m));
    CHECK(within({0, 0}, {0, 0}, five_m));
    CHECK(within({500, 0}, {0, 0}, five_m));
    CHECK_FALSE(within({501, 0}, {0, 0}, five_m));
    CHECK_FALSE(within(Position::from_meters(3.0, 4.1), {0, 0}, five_m));
    CHECK(within({0, 0}, {0, 0}, Range{0}));
    CHECK_FALSE(within({1, 0}, {0, 0}, Range{0}));
}

TEST_CASE("within is translation invariant") {
    gen::Rng rng(201);
    for (int i = 0; i < 1000; ++i) {
        Position p = gen::random_position(rng);
        Position c = gen::random_position(rng);
        Range r = gen::random_range(rng);
        int32_t dx = gen::pick(rng, -10000, 10000);
        int32_t dy = gen::pick(rng, -10000, 10000);
        Position p2{p.x_cm + dx, p.y_cm + dy};
        Position c2{c.x_cm + dx, c.y_cm + dy};
        CHECK(within(p, c, r) == within(p2, c2, r));
        CHECK(within(p, c, r) == within_oracle(p, c, r));
    }
}

TEST_CASE("subjects_in_range agrees with a linear scan") {
    gen::Rng rng(202);
    for (int i = 0; i < 200; ++i) {
        SystemState st = gen::random_state(rng);
        Position center = gen::random_position(rng);
        Range range = gen::random_range(rng);
        std::vector<SubjectId> expected;
        for (const auto& [s, pos] : st.position) {
            if (within(pos, center, range)) expected.push_back(s);
        }
        CHECK(subjects_in_range(st, center, range) == expected);
    }
}

TEST_CASE("meter conversions round to the grid") {
    CHECK(Position::from_meters(1.234, -5.678) == Position{123, -568});
    CHECK(Range::from_meters(9.96).r_dm == 100);
    CHECK(Range::from_meters(0.0).r_dm == 0);
    CHECK(Position{150, -25}.x_m() == doctest::Approx(1.5));
}

TEST_CASE("hex codecs roundtrip") {
    Bytes b = {0x00, 0x7f, 0xff, 0x10};
    CHECK(to_hex(b) == "007fff10");
    CHECK(from_hex("007fff10") == b);
    CHECK(from_hex("007FFF10") == b);
    CHECK_THROWS(from_hex("abc"));   // odd length
    CHECK_THROWS(from_hex("zz"));    // bad digit

    DeviceId id{};
    id[0] = 0xaa;
    id[15] = 0x01;
    CHECK(device_id_to_hex(id) == "aa000000000000000000000000000001");
    CHECK(device_id_from_hex("aa000000000000000000000000000001") == id);
    CHECK_THROWS(device_id_from_hex("aa00"));
}

TEST_CASE("data type names roundtrip") {
    for (int v = 1; v <= 5; ++v) {
        auto t = static_cast<DataType>(v);
        CHECK(data_type_from_name(data_type_name(t)) == t);
    }
    CHECK_THROWS(data_type_from_name("GAIT"));
}

TEST_CASE("state JSON snapshot roundtrips") {
    gen::Rng rng(203);
    for (int i = 0; i < 100; ++i) {
        SystemState st = gen::random_state(rng);
        CAPTURE(i);
        SystemState back = state_from_json(state_to_json(st));
        CHECK(back == st);
        // serialization is canonical: equal states, equal snapshots
        CHECK(state_to_json(back) == state_to_json(st));
    }
}

TEST_CASE("absent store entries read as undefined pairs") {
    SystemState st;
    SubjectId s{DataType::MacAddress, {'x'}};
    CHECK(st.store_s_pair({s, DataType::MacAddress}) == StoredPair{});
    CHECK(st.store_c_pair({DeviceId{}, s, DataType::MacAddress}) == StoredPair{});
    CHECK(st.paired_of(s) == s);
}
