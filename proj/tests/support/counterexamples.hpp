// Hand-built traces that violate exactly one of the four derived
// properties each. The violations are reachable only through direct
// state mutation (a misbehaving actor), never through `apply` alone.
#pragma once

#include "icf/trace.hpp"

namespace gen {

namespace detail {

struct TraceBuilder {
    icf::SystemState st;
    icf::Trace trace;
    uint64_t now = 0;

    void op(const icf::Operation& o) {
        icf::ApplyResult r = icf::apply(st, o, now);
        st = std::move(r.state);
        trace.push_back({now, o, r.outcome});
        now += 10;
    }
    void mutate(icf::TraceStep step) {
        if (const auto* set = std::get_if<icf::SetStoreCMutation>(&step))
            st.store_c[set->key] = {set->policy, set->value, set->collected_at_ms};
        else if (const auto* erase = std::get_if<icf::EraseKnowsMutation>(&step))
            st.knows.erase(erase->key);
        trace.push_back({now, std::move(step), icf::Outcome::ok()});
        now += 10;
    }
};

inline icf::DeviceId ce_device() {
    icf::DeviceId id{};
    id[0] = 0xce;
    id[15] = 0x01;
    return id;
}

inline icf::Policy ce_controller_policy() {
    return {"ctl",
            icf::ControllerCategory::Museum,
            {icf::Purpose::CountingVisitors, icf::Purpose::Security},
            3600,
            {icf::Recipient::ControllerOnly, icf::Recipient::Partners},
            false};
}

inline icf::Policy ce_subject_policy() {
    return {"",
            icf::ControllerCategory::Other,
            {icf::Purpose::CountingVisitors, icf::Purpose::Security,
             icf::Purpose::Analytics},
            7200,
            {icf::Recipient::ControllerOnly, icf::Recipient::Partners},
            true};
}

inline icf::SubjectId ce_subject() {
    return {icf::DataType::MacAddress, {'s', '1'}};
}

inline icf::Bytes ce_value() { return {'v', '1'}; }

inline void ce_setup(TraceBuilder& b, icf::MaybePolicy subject_policy) {
    icf::DeviceId dev = ce_device();
    icf::Policy pc = ce_controller_policy();
    b.op(icf::DeclareOp{dev, {0, 0}, {50}, icf::DataType::MacAddress, pc});
    b.op(icf::InstallOp{dev, {0, 0}, {50}, icf::DataType::MacAddress, pc});
    b.op(icf::DefineOp{ce_subject(), icf::DataType::MacAddress, subject_policy,
                       ce_value()});
    b.op(icf::MoveOp{ce_subject(), {100, 0}});
}

}  // namespace detail

// Collect after the subject's knowledge of the declaration was wiped.
inline icf::Trace counterexample_p1() {
    detail::TraceBuilder b;
    detail::ce_setup(b, detail::ce_subject_policy());
    b.mutate(icf::EraseKnowsMutation{{detail::ce_subject(), detail::ce_device()}});
    b.op(icf::CollectOp{detail::ce_device(), detail::ce_subject(),
                        icf::DataType::MacAddress, detail::ce_subject_policy(),
                        detail::ce_value()});
    return b.trace;
}

// A planted controller entry makes a policy appear stored that was never
// communicated; a policy-less collect then keeps it alongside the value.
inline icf::Trace counterexample_p2() {
    detail::TraceBuilder b;
    detail::ce_setup(b, std::nullopt);
    b.mutate(icf::SetStoreCMutation{
        {detail::ce_device(), detail::ce_subject(), icf::DataType::MacAddress},
        detail::ce_subject_policy(),
        detail::ce_value(),
        100});
    b.op(icf::CollectOp{detail::ce_device(), detail::ce_subject(),
                        icf::DataType::MacAddress, std::nullopt, detail::ce_value()});
    return b.trace;
}

// Same planted entry, surfaced through a bound-less require.
inline icf::Trace counterexample_p3() {
    detail::TraceBuilder b;
    detail::ce_setup(b, std::nullopt);
    b.mutate(icf::SetStoreCMutation{
        {detail::ce_device(), detail::ce_subject(), icf::DataType::MacAddress},
        detail::ce_subject_policy(),
        detail::ce_value(),
        100});
    b.op(icf::RequireOp{detail::ce_subject(), detail::ce_subject(), detail::ce_device(),
                        icf::DataType::MacAddress, std::nullopt, detail::ce_value()});
    return b.trace;
}

// A value planted without any policy at all.
inline icf::Trace counterexample_p4() {
    detail::TraceBuilder b;
    detail::ce_setup(b, detail::ce_subject_policy());
    b.mutate(icf::SetStoreCMutation{
        {detail::ce_device(), detail::ce_subject(), icf::DataType::MacAddress},
        std::nullopt,
        detail::ce_value(),
        100});
    return b.trace;
}

}  // namespace gen
