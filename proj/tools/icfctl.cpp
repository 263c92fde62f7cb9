// icfctl: command-line front end for the consent framework.
//   simulate       run a scripted scenario and emit its trace
//   verify         replay a trace file and check the safety properties
//   registry-serve host the HTTP device registry
//   pdc            line-oriented consent-decision session

#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "icf/beacon.hpp"
#include "icf/json_io.hpp"
#include "icf/pdc.hpp"
#include "icf/registry_http.hpp"
#include "icf/scenario.hpp"
#include "icf/trace.hpp"

namespace {

using namespace icf;

int cmd_simulate(const std::string& scenario_path, const std::string& transport,
                 int64_t seed, const std::string& out_path, bool quiet) {
    scenario::ScenarioScript script;
    try {
        script = scenario::script_from_file(scenario_path);
    } catch (const scenario::ScriptError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    std::optional<scenario::Transport> transport_override;
    if (!transport.empty()) {
        try {
            transport_override = scenario::transport_from_name(transport);
        } catch (const scenario::ScriptError& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 2;
        }
    }
    std::optional<uint64_t> seed_override;
    if (seed >= 0) seed_override = static_cast<uint64_t>(seed);

    scenario::ScenarioResult result = scenario::run(script, transport_override, seed_override);
    if (!out_path.empty()) write_trace_file(result.trace, out_path);

    std::vector<PropertyViolation> violations = verify_trace(result.trace);
    if (!quiet) {
        std::cout << "scenario: " << script.name << "\n"
                  << "entries: " << result.trace.size() << "\n"
                  << "receipts: " << result.receipts.size() << "\n";
        if (script.room_device) {
            std::cout << "gate-enabled intervals:";
            for (const auto& g : result.gate_enabled)
                std::cout << " [" << g.begin_ms << "," << g.end_ms << ")";
            std::cout << "\n";
        }
        std::cout << "violations: " << violations.size() << "\n";
        for (const auto& v : violations)
            std::cout << "  P" << v.property << " at entry " << v.entry_index << ": "
                      << v.detail << "\n";
    }
    return violations.empty() ? 0 : 1;
}

int cmd_verify(const std::string& trace_path) {
    Trace trace;
    try {
        trace = read_trace_file(trace_path);
    } catch (const ReplayError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    std::vector<PropertyViolation> violations;
    try {
        violations = verify_trace(trace);
    } catch (const ReplayError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    std::cout << "entries: " << trace.size() << "\n"
              << "violations: " << violations.size() << "\n";
    for (const auto& v : violations)
        std::cout << "  P" << v.property << " at entry " << v.entry_index << ": " << v.detail
                  << "\n";
    return violations.empty() ? 0 : 1;
}

uint64_t wall_clock_ms() {
    return static_cast<uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                     std::chrono::system_clock::now().time_since_epoch())
                                     .count());
}

int cmd_registry_serve(const std::string& bind, const std::string& tokens_path) {
    auto colon = bind.rfind(':');
    if (colon == std::string::npos) {
        std::cerr << "error: --bind expects host:port\n";
        return 2;
    }
    std::string host = bind.substr(0, colon);
    int port = 0;
    try {
        port = std::stoi(bind.substr(colon + 1));
    } catch (const std::exception&) {
        std::cerr << "error: bad port in --bind\n";
        return 2;
    }
    registry::TokenTable tokens;
    try {
        tokens = registry::TokenTable::from_file(tokens_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    registry::RegistryStore store(std::move(tokens));
    registry::HttpService service(store, wall_clock_ms);
    std::cout << "registry listening on " << host << ":" << port << "\n" << std::flush;
    if (!service.serve(host, port)) {
        std::cerr << "error: cannot bind " << bind << "\n";
        return 2;
    }
    return 0;
}

// Session commands, one per line:
//   rules
//   decide <declaration-json>
//   answer <ACCEPT_ONCE|ACCEPT_ALWAYS|REFUSE_ONCE|REFUSE_ALWAYS> <declaration-json>
//   ingest <frames-file>            (hex beacon frames, one per line)
//   poll <host> <port> <x> <y> <radius>
//   save
//   quit
int cmd_pdc(const std::string& rules_path, const std::string& gateway_kind,
            const std::string& gateway_value) {
    std::vector<pdc::ConsentRule> rules;
    try {
        if (!rules_path.empty()) rules = pdc::rules_from_file(rules_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    SubjectId gateway{data_type_from_name(gateway_kind),
                      Bytes(gateway_value.begin(), gateway_value.end())};
    pdc::Custodian custodian(std::move(rules), gateway);

    auto print_decision = [](const pdc::Decision& d) {
        if (const auto* c = std::get_if<pdc::ConsentDecision>(&d)) {
            nlohmann::json j = c->policy;
            std::cout << "CONSENT " << j.dump() << "\n";
        } else if (std::holds_alternative<pdc::RefuseDecision>(d)) {
            std::cout << "REFUSE\n";
        } else {
            std::cout << "PROMPT\n";
        }
    };

    std::string line;
    while (std::getline(std::cin, line)) {
        std::istringstream in(line);
        std::string cmd;
        in >> cmd;
        try {
            if (cmd.empty()) continue;
            if (cmd == "quit") break;
            if (cmd == "rules") {
                std::cout << pdc::rules_to_json(custodian.rules()) << "\n";
            } else if (cmd == "decide") {
                std::string rest;
                std::getline(in, rest);
                Declaration decl = nlohmann::json::parse(rest).get<Declaration>();
                print_decision(custodian.consider(decl, wall_clock_ms()));
            } else if (cmd == "answer") {
                std::string answer;
                in >> answer;
                std::string rest;
                std::getline(in, rest);
                Declaration decl = nlohmann::json::parse(rest).get<Declaration>();
                pdc::PromptAnswer a;
                if (answer == "ACCEPT_ONCE") a = pdc::PromptAnswer::AcceptOnce;
                else if (answer == "ACCEPT_ALWAYS") a = pdc::PromptAnswer::AcceptAlways;
                else if (answer == "REFUSE_ONCE") a = pdc::PromptAnswer::RefuseOnce;
                else if (answer == "REFUSE_ALWAYS") a = pdc::PromptAnswer::RefuseAlways;
                else { std::cout << "ERROR unknown answer\n"; continue; }
                print_decision(custodian.answer_prompt(decl, a));
            } else if (cmd == "ingest") {
                std::string path;
                in >> path;
                std::ifstream frames(path);
                if (!frames) { std::cout << "ERROR cannot read " << path << "\n"; continue; }
                beacon::Reassembler reassembler;
                std::string hexline;
                while (std::getline(frames, hexline)) {
                    if (hexline.empty()) continue;
                    auto decl = reassembler.add(beacon::decode_fragment(from_hex(hexline)));
                    if (decl) {
                        nlohmann::json j = *decl;
                        std::cout << "DECLARATION " << j.dump() << "\n";
                    }
                }
            } else if (cmd == "poll") {
                std::string host;
                int port = 0;
                double x = 0, y = 0, radius = 0;
                in >> host >> port >> x >> y >> radius;
                registry::HttpClient client(host, port, "");
                auto records = client.nearby(x, y, radius);
                if (!records) { std::cout << "ERROR registry unreachable\n"; continue; }
                for (const auto& rec : *records) {
                    nlohmann::json j = rec.declaration();
                    std::cout << "DECLARATION " << j.dump() << "\n";
                }
            } else if (cmd == "save") {
                if (rules_path.empty()) { std::cout << "ERROR no rules file\n"; continue; }
                pdc::rules_to_file(custodian.rules(), rules_path);
                std::cout << "SAVED\n";
            } else {
                std::cout << "ERROR unknown command " << cmd << "\n";
            }
        } catch (const std::exception& e) {
            std::cout << "ERROR " << e.what() << "\n";
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"IoT information and consent toolkit"};
    app.require_subcommand(1);

    std::string scenario_path, transport, out_path;
    int64_t seed = -1;
    bool quiet = false;
    auto* simulate = app.add_subcommand("simulate", "run a scenario script");
    simulate->add_option("--scenario", scenario_path, "scenario JSON file")
        ->required()->envname("ICF_SCENARIO");
    simulate->add_option("--transport", transport, "beacon or registry")
        ->envname("ICF_TRANSPORT");
    simulate->add_option("--seed", seed, "RNG seed override")->envname("ICF_SEED");
    simulate->add_option("--out", out_path, "trace output file (JSON lines)");
    simulate->add_flag("--quiet", quiet, "suppress the run summary");

    std::string trace_path;
    auto* verify = app.add_subcommand("verify", "check a trace file");
    verify->add_option("--trace", trace_path, "trace file (JSON lines)")->required();

    std::string bind = "127.0.0.1:8700", tokens_path;
    auto* serve = app.add_subcommand("registry-serve", "host the device registry");
    serve->add_option("--bind", bind, "host:port")->envname("ICF_BIND");
    serve->add_option("--tokens", tokens_path, "bearer token table (JSON)")
        ->required()->envname("ICF_TOKENS");

    std::string rules_path, gateway_kind = "MAC_ADDRESS", gateway_value = "gateway";
    auto* pdc_cmd = app.add_subcommand("pdc", "consent decision session");
    pdc_cmd->add_option("--rules", rules_path, "consent rule file (JSON)")
        ->envname("ICF_RULES");
    pdc_cmd->add_option("--gateway-kind", gateway_kind, "gateway identifier kind");
    pdc_cmd->add_option("--gateway-value", gateway_value, "gateway identifier value");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed())
            return cmd_simulate(scenario_path, transport, seed, out_path, quiet);
        if (verify->parsed()) return cmd_verify(trace_path);
        if (serve->parsed()) return cmd_registry_serve(bind, tokens_path);
        if (pdc_cmd->parsed()) return cmd_pdc(rules_path, gateway_kind, gateway_value);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
