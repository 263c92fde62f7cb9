#include <benchmark/benchmark.h>

#include "icf/beacon.hpp"
#include "icf/registry.hpp"
#include "icf/semantics.hpp"

using namespace icf;

namespace {

Policy controller_policy() {
    return {"city-road-authority",
            ControllerCategory::RoadOperator,
            {Purpose::Billing, Purpose::Security},
            3600,
            {Recipient::ControllerOnly},
            false};
}

Policy subject_policy() {
    Policy p = controller_policy();
    p.purposes.insert(Purpose::Analytics);
    p.retention_seconds = 86400;
    p.recipients.insert(Recipient::Partners);
    return p;
}

Declaration sample_declaration() {
    Declaration d;
    d.device_id[0] = 0xbe;
    d.position = {1200, -450};
    d.range = {80};
    d.data_type = DataType::PlateNumber;
    d.policy = controller_policy();
    return d;
}

void bm_implies(benchmark::State& state) {
    Policy a = controller_policy();
    Policy b = subject_policy();
    for (auto _ : state) benchmark::DoNotOptimize(implies(a, b));
}
BENCHMARK(bm_implies);

void bm_encode_policy(benchmark::State& state) {
    Policy p = subject_policy();
    for (auto _ : state) benchmark::DoNotOptimize(encode_policy(p));
}
BENCHMARK(bm_encode_policy);

void bm_decode_policy(benchmark::State& state) {
    Bytes wire = encode_policy(subject_policy());
    for (auto _ : state) benchmark::DoNotOptimize(decode_policy(wire));
}
BENCHMARK(bm_decode_policy);

void bm_apply_collect(benchmark::State& state) {
    Declaration d = sample_declaration();
    SystemState st;
    st = apply(st, DeclareOp{d.device_id, d.position, d.range, d.data_type, d.policy}, 0)
             .state;
    st = apply(st, InstallOp{d.device_id, d.position, d.range, d.data_type, d.policy}, 0)
             .state;
    SubjectId s{DataType::PlateNumber, {'A', 'B', '1'}};
    st = apply(st, DefineOp{s, s.kind, subject_policy(), Bytes{'A', 'B', '1'}}, 1).state;
    st = apply(st, MoveOp{s, d.position}, 2).state;
    CollectOp collect{d.device_id, s, s.kind, subject_policy(), Bytes{'A', 'B', '1'}};
    for (auto _ : state) benchmark::DoNotOptimize(apply(st, collect, 10));
}
BENCHMARK(bm_apply_collect);

void bm_encode_declaration(benchmark::State& state) {
    Declaration d = sample_declaration();
    for (auto _ : state) benchmark::DoNotOptimize(beacon::encode_declaration(d));
}
BENCHMARK(bm_encode_declaration);

void bm_registry_nearby(benchmark::State& state) {
    registry::TokenTable tokens;
    tokens.add("dc", {"controller", "dc"});
    registry::RegistryStore store(std::move(tokens));
    for (int i = 0; i < 200; ++i) {
        registry::RegistryRecord r;
        r.device_id[0] = 0xbe;
        r.device_id[15] = uint8_t(i);
        r.device_id[14] = uint8_t(i >> 8);
        r.position = {(i % 20) * 500, (i / 20) * 500};
        r.range = {60};
        r.data_type = DataType::MacAddress;
        r.policy = controller_policy();
        store.put_device("dc", r, 1);
    }
    for (auto _ : state) benchmark::DoNotOptimize(store.nearby(25.0, 15.0, 30.0));
}
BENCHMARK(bm_registry_nearby);

}  // namespace

BENCHMARK_MAIN();
