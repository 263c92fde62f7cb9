#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include "icf/trace.hpp"
#include "support/counterexamples.hpp"

#ifndef ICFCTL_PATH
#error "ICFCTL_PATH must point at the icfctl binary"
#endif
#ifndef SCENARIO_DIR
#error "SCENARIO_DIR must point at the scenario scripts"
#endif

namespace {

int run_cmd(const std::string& args) {
    std::string cmd = std::string(ICFCTL_PATH) + " " + args + " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string scenario(const char* name) {
    return std::string(SCENARIO_DIR) + "/" + name;
}

}  // namespace

TEST_CASE("simulate writes a verifiable trace and exits zero") {
    std::string out = "cli_sim_trace.jsonl";
    int rc = run_cmd("simulate --scenario " + scenario("anpr_basic.json") + " --out " +
                     out + " --quiet");
    CHECK(rc == 0);
    icf::Trace t = icf::read_trace_file(out);
    CHECK_FALSE(t.empty());
    CHECK(icf::verify_trace(t).empty());
    std::remove(out.c_str());
}

TEST_CASE("simulate rejects a broken scenario with exit 2") {
    std::string bad = "cli_bad_scenario.json";
    {
        std::ofstream f(bad);
        f << "{\"name\":\"x\"}";
    }
    CHECK(run_cmd("simulate --scenario " + bad) == 2);
    CHECK(run_cmd("simulate --scenario no_such_file.json") == 2);
    std::remove(bad.c_str());
}

TEST_CASE("verify distinguishes clean, violating and malformed traces") {
    std::string clean = "cli_clean.jsonl";
    REQUIRE(run_cmd("simulate --scenario " + scenario("mall_walk.json") + " --out " +
                    clean + " --quiet") == 0);
    CHECK(run_cmd("verify --trace " + clean) == 0);
    std::remove(clean.c_str());

    std::string bad = "cli_violating.jsonl";
    icf::write_trace_file(gen::counterexample_p4(), bad);
    CHECK(run_cmd("verify --trace " + bad) == 1);
    std::remove(bad.c_str());

    std::string garbage = "cli_garbage.jsonl";
    {
        std::ofstream f(garbage);
        f << "this is not a trace\n";
    }
    CHECK(run_cmd("verify --trace " + garbage) == 2);
    CHECK(run_cmd("verify --trace no_such_trace.jsonl") == 2);
    std::remove(garbage.c_str());
}
