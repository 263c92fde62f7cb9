#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "icf/registry.hpp"
#include "icf/registry_http.hpp"
#include "support/generators.hpp"

using namespace icf;
using namespace icf::registry;

namespace {

DeviceId rid(uint8_t n) {
    DeviceId id{};
    id[0] = 0xbb;
    id[15] = n;
    return id;
}

Policy policy() {
    return {"mall-count-co", ControllerCategory::Retail, {Purpose::CountingVisitors},
            1800, {Recipient::ControllerOnly}, false};
}

RegistryRecord record(uint8_t n, double x = 0, double y = 0, double range = 5.0) {
    RegistryRecord r;
    r.device_id = rid(n);
    r.position = Position::from_meters(x, y);
    r.range = Range::from_meters(range);
    r.data_type = DataType::MacAddress;
    r.policy = policy();
    return r;
}

TokenTable tokens() {
    TokenTable t;
    t.add("tok-dc-1", {"controller-one", "dc"});
    t.add("tok-dc-2", {"controller-two", "dc"});
    t.add("tok-ds-1", {"subject-one", "ds"});
    return t;
}

}  // namespace

TEST_CASE("device writes are authenticated and owner-scoped") {
    RegistryStore store(tokens());
    CHECK(store.put_device("bogus", record(1), 10) == kUnauthorized);
    CHECK(store.put_device("tok-ds-1", record(1), 10) == kUnauthorized);
    CHECK(store.put_device("tok-dc-1", record(1), 10) == kOk);
    CHECK(store.put_device("tok-dc-2", record(1), 20) == kForbidden);
    CHECK(store.put_device("tok-dc-1", record(1, 1.0), 30) == kOk);

    auto [code, rec] = store.get_device(rid(1));
    CHECK(code == kOk);
    REQUIRE(rec.has_value());
    CHECK(rec->declared_at_ms == 30);  // server clock wins
    CHECK(rec->human_readable == render_policy(policy()));
    CHECK(store.get_device(rid(9)).first == kNotFound);

    CHECK(store.delete_device("tok-dc-2", rid(1)) == kForbidden);
    CHECK(store.delete_device("tok-ds-1", rid(1)) == kUnauthorized);
    CHECK(store.delete_device("tok-dc-1", rid(1)) == kOk);
    CHECK(store.delete_device("tok-dc-1", rid(1)) == kNotFound);
}

TEST_CASE("nearby boundary is radius plus range, inclusive") {
    RegistryStore store(tokens());
    REQUIRE(store.put_device("tok-dc-1", record(1, 0, 0, 5.0), 1) == kOk);
    // reach = 10 m query radius + 5 m range
    CHECK(store.nearby(15.0, 0, 10.0).second.size() == 1);
    CHECK(store.nearby(15.01, 0, 10.0).second.empty());
    CHECK(store.nearby(9.0, 12.0, 10.0).second.size() == 1);  // 3-4-5 at 15 m
    CHECK(store.nearby(0, 0, 0).second.size() == 1);
    CHECK(store.nearby(0, 0, -1).first == kBadRequest);
}

TEST_CASE("nearby matches the linear-scan oracle on random registries") {
    gen::Rng rng(601);
    for (int trial = 0; trial < 100; ++trial) {
        TokenTable t;
        t.add("dc", {"c", "dc"});
        RegistryStore store(std::move(t));
        int n = gen::pick(rng, 0, 200);
        std::vector<RegistryRecord> fleet;
        for (int i = 0; i < n; ++i) {
            RegistryRecord r;
            r.device_id[0] = 0xcc;
            r.device_id[14] = uint8_t(i >> 8);
            r.device_id[15] = uint8_t(i);
            r.position = gen::random_position(rng);
            r.range = gen::random_range(rng);
            r.data_type = DataType::MacAddress;
            r.policy = policy();
            REQUIRE(store.put_device("dc", r, 1) == kOk);
            fleet.push_back(r);
        }
        double x = gen::pick(rng, -3000, 3000) / 100.0;
        double y = gen::pick(rng, -3000, 3000) / 100.0;
        double radius = gen::pick(rng, 0, 2000) / 100.0;
        size_t expected = 0;
        for (const auto& r : fleet) {
            int64_t dx = int64_t(Position::from_meters(x, y).x_cm) - r.position.x_cm;
            int64_t dy = int64_t(Position::from_meters(x, y).y_cm) - r.position.y_cm;
            int64_t reach = std::llround(radius * 100.0) + int64_t(r.range.r_dm) * 10;
            if (dx * dx + dy * dy <= reach * reach) ++expected;
        }
        CAPTURE(trial);
        CHECK(store.nearby(x, y, radius).second.size() == expected);
    }
}

TEST_CASE("the consent log is append-only and owner-readable") {
    RegistryStore store(tokens());
    REQUIRE(store.put_device("tok-dc-1", record(1), 1) == kOk);

    ConsentRecord c;
    c.device_id = rid(1);
    c.subject = {DataType::MacAddress, {'s', '1'}};
    c.policy = policy();
    CHECK(store.post_consent("bogus", c, 100) == kUnauthorized);
    CHECK(store.post_consent("tok-ds-1", c, 100) == kOk);
    c.subject.value = {'s', '2'};
    CHECK(store.post_consent("tok-ds-1", c, 200) == kOk);

    CHECK(store.get_consents("tok-dc-2", rid(1), 0).first == kForbidden);
    CHECK(store.get_consents("tok-ds-1", rid(1), 0).first == kForbidden);
    auto [code, all] = store.get_consents("tok-dc-1", rid(1), 0);
    REQUIRE(code == kOk);
    REQUIRE(all.size() == 2);
    CHECK(all[0].timestamp_ms == 100);  // server-assigned
    CHECK(all[0].token_id == "subject-one");
    CHECK(all[1].subject.value == Bytes{'s', '2'});

    // earlier reads are a prefix of later ones
    c.subject.value = {'s', '3'};
    REQUIRE(store.post_consent("tok-ds-1", c, 300) == kOk);
    auto later = store.get_consents("tok-dc-1", rid(1), 0).second;
    REQUIRE(later.size() == 3);
    CHECK(std::equal(all.begin(), all.end(), later.begin()));

    CHECK(store.get_consents("tok-dc-1", rid(1), 200).second.size() == 2);  // inclusive
    CHECK(store.get_consents("tok-dc-1", rid(1), 301).second.empty());
}

TEST_CASE("poll client emits each declaration version once") {
    RegistryStore store(tokens());
    REQUIRE(store.put_device("tok-dc-1", record(1, 0, 0, 5.0), 10) == kOk);
    bool reachable = true;
    PollClient client(
        [&](double x, double y, double r)
            -> std::optional<std::vector<RegistryRecord>> {
            if (!reachable) return std::nullopt;
            return store.nearby(x, y, r).second;
        },
        50.0, 2000);

    CHECK(client.due(0));
    CHECK(client.poll_once({0, 0}, 0).size() == 1);
    CHECK_FALSE(client.due(1999));
    CHECK(client.due(2000));
    CHECK(client.poll_once({0, 0}, 2000).empty());  // unchanged

    // a re-declaration shows up again
    REQUIRE(store.put_device("tok-dc-1", record(1, 1.0, 0, 5.0), 50) == kOk);
    auto fresh = client.poll_once({0, 0}, 4000);
    REQUIRE(fresh.size() == 1);
    CHECK(fresh[0].position == Position::from_meters(1.0, 0));

    CHECK(client.staleness_ms(4500) == 500);
    reachable = false;
    CHECK(client.poll_once({0, 0}, 6000).empty());
    CHECK(client.staleness_ms(6000) == 2000);  // still counting from 4000
    reachable = true;
    client.poll_once({0, 0}, 8000);
    CHECK(client.staleness_ms(8000) == 0);
}

TEST_CASE("HTTP service round trip") {
    RegistryStore store(tokens());
    uint64_t clock = 500;
    HttpService service(store, [&] { return clock; });
    int port = service.start("127.0.0.1");
    REQUIRE(port > 0);

    HttpClient dc1("127.0.0.1", port, "tok-dc-1");
    HttpClient dc2("127.0.0.1", port, "tok-dc-2");
    HttpClient ds("127.0.0.1", port, "tok-ds-1");
    HttpClient anon("127.0.0.1", port, "bogus");

    CHECK(anon.put_device(record(1)) == kUnauthorized);
    CHECK(dc1.put_device(record(1)) == kOk);
    CHECK(dc2.put_device(record(1)) == kForbidden);

    auto [code, got] = dc1.get_device(rid(1));
    CHECK(code == kOk);
    REQUIRE(got.has_value());
    CHECK(got->declared_at_ms == 500);
    CHECK(got->policy == policy());
    CHECK(got->human_readable == render_policy(policy()));
    CHECK(dc1.get_device(rid(7)).first == kNotFound);

    auto found = ds.nearby(0, 0, 10.0);
    REQUIRE(found.has_value());
    CHECK(found->size() == 1);
    auto none = ds.nearby(1000.0, 1000.0, 1.0);
    REQUIRE(none.has_value());
    CHECK(none->empty());

    ConsentRecord c;
    c.device_id = rid(1);
    c.subject = {DataType::MacAddress, {'s', '1'}};
    c.policy = policy();
    clock = 900;
    CHECK(ds.post_consent(c) == kOk);
    CHECK(anon.post_consent(c) == kUnauthorized);

    auto [ccode, consents] = dc1.get_consents(rid(1), 0);
    CHECK(ccode == kOk);
    REQUIRE(consents.size() == 1);
    CHECK(consents[0].timestamp_ms == 900);
    CHECK(consents[0].subject == c.subject);
    CHECK(dc2.get_consents(rid(1), 0).first == kForbidden);

    CHECK(dc1.delete_device(rid(1)) == kOk);
    CHECK(dc1.get_device(rid(1)).first == kNotFound);

    service.stop();
    HttpClient dead("127.0.0.1", port, "tok-ds-1");
    CHECK_FALSE(dead.nearby(0, 0, 1.0).has_value());
}

TEST_CASE("record JSON codecs roundtrip") {
    RegistryRecord r = record(3, 1.5, -2.25, 7.5);
    r.declared_at_ms = 123;
    r.human_readable = render_policy(r.policy);
    CHECK(record_from_json(record_to_json(r)) == r);

    ConsentRecord c;
    c.device_id = rid(3);
    c.subject = {DataType::PlateNumber, {'p', 'l'}};
    c.policy = policy();
    c.timestamp_ms = 456;
    c.token_id = "subject-one";
    CHECK(consent_from_json(consent_to_json(c)) == c);
}
