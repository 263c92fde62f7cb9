#include <doctest.h>

#include "icf/semantics.hpp"
#include "support/generators.hpp"

using namespace icf;

namespace {

DeviceId dev(uint8_t n) {
    DeviceId id{};
    id[0] = 0xd0;
    id[15] = n;
    return id;
}

const SubjectId kSub{DataType::MacAddress, {'m', '1'}};
const Bytes kVal = {0xde, 0xad};

Policy controller_policy() {
    return {"ctl",
            ControllerCategory::Retail,
            {Purpose::CountingVisitors},
            1800,
            {Recipient::ControllerOnly},
            false};
}

Policy loose_bound() {
    return {"",
            ControllerCategory::Other,
            {Purpose::CountingVisitors, Purpose::Analytics},
            3600,
            {Recipient::ControllerOnly, Recipient::Partners},
            true};
}

Policy strict_bound() {
    Policy p = loose_bound();
    p.purposes = {Purpose::Analytics};  // excludes the declared purpose
    return p;
}

// Declared+installed device, subject defined and moved into range.
SystemState ready_state(MaybePolicy subject_policy = loose_bound()) {
    SystemState st;
    auto step = [&](const Operation& op) {
        ApplyResult r = apply(st, op, 0);
        REQUIRE(r.outcome.applied);
        st = std::move(r.state);
    };
    step(DeclareOp{dev(1), {0, 0}, {50}, DataType::MacAddress, controller_policy()});
    step(InstallOp{dev(1), {0, 0}, {50}, DataType::MacAddress, controller_policy()});
    step(DefineOp{kSub, DataType::MacAddress, subject_policy, kVal});
    step(MoveOp{kSub, {100, 0}});
    return st;
}

}  // namespace

TEST_CASE("install requires a matching prior declaration") {
    SystemState st;
    InstallOp install{dev(1), {0, 0}, {50}, DataType::MacAddress, controller_policy()};
    CHECK(apply(st, install, 0).outcome.reason == "not declared");

    st = apply(st, DeclareOp{dev(1), {0, 0}, {50}, DataType::MacAddress,
                             controller_policy()},
               0).state;
    InstallOp shifted = install;
    shifted.position = {1, 0};
    CHECK(apply(st, shifted, 0).outcome.reason == "declaration mismatch");
    CHECK(apply(st, install, 0).outcome.applied);
}

TEST_CASE("declare informs subjects already inside the range") {
    SystemState st;
    st = apply(st, MoveOp{kSub, {100, 0}}, 0).state;
    SubjectId far{DataType::MacAddress, {'f', 'r'}};
    st = apply(st, MoveOp{far, {10000, 0}}, 0).state;
    DeclareOp decl{dev(1), {0, 0}, {50}, DataType::MacAddress, controller_policy()};
    st = apply(st, decl, 0).state;
    CHECK(st.knows.count({kSub, dev(1)}) == 1);
    CHECK(st.knows.count({far, dev(1)}) == 0);
    CHECK(st.knows.at({kSub, dev(1)}) ==
          DeviceInfo{{0, 0}, {50}, DataType::MacAddress, controller_policy()});
}

TEST_CASE("collect stores under a compliant subject policy") {
    SystemState st = ready_state();
    CollectOp collect{dev(1), kSub, DataType::MacAddress, loose_bound(), kVal};
    ApplyResult r = apply(st, collect, 42);
    REQUIRE(r.outcome.applied);
    const ControllerEntry& e = r.state.store_c.at({dev(1), kSub, DataType::MacAddress});
    CHECK(e.pair() == StoredPair{loose_bound(), kVal});
    CHECK(e.collected_at_ms == 42);
    CHECK(check_postcondition(st, collect, r.state, 42));
}

TEST_CASE("non-compliant collect stores the undefined pair") {
    SystemState st = ready_state(strict_bound());
    CollectOp collect{dev(1), kSub, DataType::MacAddress, strict_bound(), kVal};
    ApplyResult r = apply(st, collect, 42);
    REQUIRE(r.outcome.applied);
    CHECK(r.state.store_c.at({dev(1), kSub, DataType::MacAddress}).pair() == StoredPair{});
    CHECK(check_postcondition(st, collect, r.state, 42));
}

TEST_CASE("collect with no policy anywhere is rejected") {
    SystemState st = ready_state(std::nullopt);
    CollectOp collect{dev(1), kSub, DataType::MacAddress, std::nullopt, kVal};
    ApplyResult r = apply(st, collect, 0);
    CHECK(r.outcome.reason == "no policy available");
    CHECK(r.state == st);  // rejection leaves the state untouched
}

TEST_CASE("a previously stored policy backs a policy-less collect") {
    SystemState st = ready_state();
    st = apply(st, CollectOp{dev(1), kSub, DataType::MacAddress, loose_bound(), kVal}, 1)
             .state;
    // the subject clears its store; define overrides keep the old policy,
    // so simulate a fresh subject store instead
    st.store_s.erase({kSub, DataType::MacAddress});
    st.store_s[{kSub, DataType::MacAddress}] = {std::nullopt, kVal};
    CollectOp collect{dev(1), kSub, DataType::MacAddress, std::nullopt, kVal};
    ApplyResult r = apply(st, collect, 2);
    REQUIRE(r.outcome.applied);
    CHECK(r.state.store_c.at({dev(1), kSub, DataType::MacAddress}).pair() ==
          StoredPair{loose_bound(), kVal});
}

TEST_CASE("collect precondition failures report the failing clause") {
    SystemState st = ready_state();
    CollectOp base{dev(1), kSub, DataType::MacAddress, loose_bound(), kVal};

    SUBCASE("unknown device") {
        CollectOp op = base;
        op.device = dev(9);
        CHECK(apply(st, op, 0).outcome.reason == "device not installed");
    }
    SUBCASE("wrong data type") {
        CollectOp op = base;
        op.data_type = DataType::Image;
        CHECK(apply(st, op, 0).outcome.reason == "data type mismatch");
    }
    SUBCASE("subject without a position") {
        CollectOp op = base;
        op.subject = {DataType::MacAddress, {'g'}};
        CHECK(apply(st, op, 0).outcome.reason == "subject not positioned");
    }
    SUBCASE("subject out of range") {
        st = apply(st, MoveOp{kSub, {10000, 0}}, 0).state;
        CHECK(apply(st, base, 0).outcome.reason == "subject out of range");
    }
    SUBCASE("operands diverge from the subject store") {
        CollectOp op = base;
        op.value = Bytes{0x01};
        CHECK(apply(st, op, 0).outcome.reason == "subject store mismatch");
    }
}

TEST_CASE("define overrides fieldwise and erases empty entries") {
    SystemState st;
    StoreSKey key{kSub, DataType::MacAddress};
    st = apply(st, DefineOp{kSub, DataType::MacAddress, std::nullopt, kVal}, 0).state;
    CHECK(st.store_s.at(key) == StoredPair{std::nullopt, kVal});

    st = apply(st, DefineOp{kSub, DataType::MacAddress, loose_bound(), std::nullopt}, 0)
             .state;
    CHECK(st.store_s.at(key) == StoredPair{loose_bound(), kVal});

    // an all-undefined define cannot clear anything: override keeps both
    st = apply(st, DefineOp{kSub, DataType::MacAddress, std::nullopt, std::nullopt}, 0)
             .state;
    CHECK(st.store_s.at(key) == StoredPair{loose_bound(), kVal});

    SystemState empty;
    empty = apply(empty, DefineOp{kSub, DataType::MacAddress, std::nullopt, std::nullopt},
                  0).state;
    CHECK(empty.store_s.count(key) == 0);
}

TEST_CASE("pair and identity pairing") {
    SystemState st;
    SubjectId host{DataType::MacAddress, {'h'}};
    st = apply(st, PairOp{kSub, host}, 0).state;
    CHECK(st.paired_of(kSub) == host);
    st = apply(st, PairOp{kSub, kSub}, 0).state;
    CHECK(st.paired_of(kSub) == kSub);
    CHECK(st.paired.empty());
}

TEST_CASE("require pushes the requester policy onto an existing entry") {
    SystemState st = ready_state();
    st = apply(st, CollectOp{dev(1), kSub, DataType::MacAddress, loose_bound(), kVal}, 5)
             .state;
    Policy zero = loose_bound();
    zero.retention_seconds = 0;
    st = apply(st, DefineOp{kSub, DataType::MacAddress, zero, std::nullopt}, 6).state;
    RequireOp req{kSub, kSub, dev(1), DataType::MacAddress, zero, kVal};
    ApplyResult r = apply(st, req, 7);
    REQUIRE(r.outcome.applied);
    const ControllerEntry& e = r.state.store_c.at({dev(1), kSub, DataType::MacAddress});
    CHECK(e.pair() == StoredPair{zero, kVal});
    CHECK(e.collected_at_ms == 5);  // require keeps the collection time
    CHECK(check_postcondition(st, req, r.state, 7));

    SUBCASE("nothing stored") {
        RequireOp other = req;
        other.data_source = {DataType::MacAddress, {'o'}};
        CHECK(apply(st, other, 7).outcome.reason == "nothing stored for subject");
    }
    SUBCASE("requester out of range") {
        SystemState moved = apply(st, MoveOp{kSub, {10000, 0}}, 7).state;
        CHECK(apply(moved, req, 7).outcome.reason == "requester out of range");
    }
    SUBCASE("requester policy mismatch") {
        RequireOp other = req;
        other.policy = loose_bound();
        CHECK(apply(st, other, 7).outcome.reason == "requester policy mismatch");
    }
    SUBCASE("source value mismatch") {
        RequireOp other = req;
        other.value = Bytes{0x77};
        CHECK(apply(st, other, 7).outcome.reason == "source value mismatch");
    }
    SUBCASE("not paired") {
        SubjectId stranger{DataType::MacAddress, {'z'}};
        SystemState st2 = apply(st, DefineOp{stranger, DataType::MacAddress, zero, kVal},
                                7).state;
        RequireOp other = req;
        other.data_source = stranger;
        // the entry for the stranger does not exist either, so plant one
        st2.store_c[{dev(1), stranger, DataType::MacAddress}] = {loose_bound(), kVal, 5};
        CHECK(apply(st2, other, 7).outcome.reason == "not paired");
    }
}

TEST_CASE("malformed operands throw rather than reject") {
    SystemState st;
    SubjectId empty_subject{DataType::MacAddress, {}};
    CHECK_THROWS_AS(apply(st, MoveOp{empty_subject, {0, 0}}, 0), MalformedOperationError);
    SubjectId oversized{DataType::MacAddress, Bytes(33, 0xab)};
    CHECK_THROWS_AS(apply(st, MoveOp{oversized, {0, 0}}, 0), MalformedOperationError);
    CHECK_THROWS_AS(apply(st, DefineOp{kSub, DataType::MacAddress, std::nullopt,
                                       Bytes(257, 0x00)},
                          0),
                    MalformedOperationError);
    Policy bad = controller_policy();
    bad.controller_id.assign(33, 'x');
    CHECK_THROWS_AS(
        apply(st, DeclareOp{dev(1), {0, 0}, {50}, DataType::MacAddress, bad}, 0),
        MalformedOperationError);
}

TEST_CASE("purge clears entries at the retention boundary, inclusive") {
    SystemState st = ready_state();
    st = apply(st, CollectOp{dev(1), kSub, DataType::MacAddress, loose_bound(), kVal},
               1000).state;
    StoreCKey key{dev(1), kSub, DataType::MacAddress};
    // loose_bound retains for 3600 s
    SystemState before = purge_expired(st, 1000 + 3600 * 1000 - 1);
    CHECK(before.store_c.at(key).pair() == StoredPair{loose_bound(), kVal});
    SystemState at = purge_expired(st, 1000 + 3600 * 1000);
    CHECK(at.store_c.at(key).pair() == StoredPair{});
    // undefined-policy entries are never aged out
    st.store_c[key] = {std::nullopt, kVal, 0};
    CHECK(purge_expired(st, 1u << 30).store_c.at(key).value == kVal);
}

TEST_CASE("postcondition checker flags undue mutations") {
    SystemState st = ready_state();
    CollectOp collect{dev(1), kSub, DataType::MacAddress, loose_bound(), kVal};
    ApplyResult r = apply(st, collect, 3);
    REQUIRE(r.outcome.applied);

    SUBCASE("tampered target entry") {
        SystemState bad = r.state;
        bad.store_c.at({dev(1), kSub, DataType::MacAddress}).value = Bytes{0x00};
        CHECK_FALSE(check_postcondition(st, collect, bad, 3));
    }
    SUBCASE("frame violation in an unrelated map") {
        SystemState bad = r.state;
        bad.position[{DataType::Sound, {'q'}}] = {0, 0};
        CHECK_FALSE(check_postcondition(st, collect, bad, 3));
    }
    SUBCASE("frame violation on an unrelated entry of the same map") {
        SystemState bad = r.state;
        bad.store_c[{dev(2), kSub, DataType::MacAddress}] = {loose_bound(), kVal, 3};
        CHECK_FALSE(check_postcondition(st, collect, bad, 3));
    }
    SUBCASE("dropped knowledge update after declare") {
        DeclareOp decl{dev(2), {100, 0}, {50}, DataType::MacAddress, controller_policy()};
        ApplyResult rd = apply(st, decl, 4);
        SystemState bad = rd.state;
        bad.knows.erase({kSub, dev(2)});
        CHECK(check_postcondition(st, decl, rd.state, 4));
        CHECK_FALSE(check_postcondition(st, decl, bad, 4));
    }
}

TEST_CASE("random applied operations satisfy their postconditions") {
    gen::Rng rng(301);
    for (int i = 0; i < 1000; ++i) {
        SystemState st = gen::random_state(rng);
        Operation op = gen::random_operation(rng, st);
        CAPTURE(i);
        try {
            ApplyResult r = apply(st, op, 77);
            if (r.outcome.applied) {
                CHECK(check_postcondition(st, op, r.state, 77));
            } else {
                CHECK(r.state == st);
            }
        } catch (const MalformedOperationError&) {
            // operand validation, not a transition
        }
    }
}
