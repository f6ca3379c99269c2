// Regenerates the derived demo assets for the bundled cleaning environment:
//   cleaning_policy_unsafe.json  tabular policy that cleans until the battery dies
//   cleaning_fix.json            scripted alternatives for that policy's frontier
// Run with the assets directory as the only argument. Output is
// deterministic, so a rerun after editing cleaning.prism refreshes both
// files in place. Prints the before/after measurements of the scripted
// repair for reference.

#include "cfsafe/advisor.hpp"
#include "cfsafe/builder.hpp"
#include "cfsafe/checker.hpp"
#include "cfsafe/policy.hpp"
#include "cfsafe/prism.hpp"
#include "cfsafe/repair.hpp"

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace {

std::string never_charge_rule(int d1, int d2, int blocked) {
    if (d1 > 0) return "clean1_soft";
    if (d2 > 0) return blocked == 1 ? "next" : "clean2_soft";
    return "idle";
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: cfsafe-make-assets <assets-dir>\n";
        return 1;
    }
    std::string dir = argv[1];

    cfsafe::ParseResult parsed = cfsafe::parse_model(cfsafe::ModelSource::from_file(dir + "/cleaning.prism"));
    if (!parsed.ok()) {
        for (const auto& d : parsed.diagnostics) {
            std::cerr << "cleaning.prism:" << d.line << ":" << d.column << ": " << d.message << "\n";
        }
        return 1;
    }
    const cfsafe::Mdp& mdp = *parsed.mdp;

    // one entry per operational state, in nested ascending order
    std::ostringstream policy;
    policy << "{\n  \"type\": \"tabular\",\n  \"actions\": [";
    for (std::size_t i = 0; i < mdp.actions.size(); ++i) {
        if (i > 0) policy << ", ";
        policy << "\"" << mdp.actions[i] << "\"";
    }
    policy << "],\n  \"entries\": [\n";
    bool first = true;
    for (int d1 = 0; d1 <= 3; ++d1) {
        for (int d2 = 0; d2 <= 3; ++d2) {
            for (int energy = 0; energy <= 8; ++energy) {
                for (int slip = 0; slip <= 2; ++slip) {
                    for (int blocked = 0; blocked <= 1; ++blocked) {
                        if (!first) policy << ",\n";
                        first = false;
                        std::string chosen = never_charge_rule(d1, d2, blocked);
                        policy << "    {\"state\": [" << d1 << ", " << d2 << ", " << energy << ", " << slip
                               << ", " << blocked << "], \"q\": [";
                        for (std::size_t a = 0; a < mdp.actions.size(); ++a) {
                            if (a > 0) policy << ", ";
                            policy << (mdp.actions[a] == chosen ? "1.0" : "0.0");
                        }
                        policy << "]}";
                    }
                }
            }
        }
    }
    policy << "\n  ]\n}\n";
    {
        std::ofstream out(dir + "/cleaning_policy_unsafe.json", std::ios::binary | std::ios::trunc);
        out << policy.str();
    }

    cfsafe::PolicyModel unsafe_policy = cfsafe::parse_policy(policy.str(), "cleaning_policy_unsafe.json");
    cfsafe::InducedDtmc chain = cfsafe::build_induced(mdp, unsafe_policy, {});
    std::vector<cfsafe::ViolationRecord> frontier = cfsafe::extract_frontier(chain, "no_energy");

    std::ostringstream fix;
    fix << "[\n";
    for (std::size_t i = 0; i < frontier.size(); ++i) {
        if (i > 0) fix << ",\n";
        fix << "  {\"state\": [";
        for (std::size_t f = 0; f < frontier[i].features.features.size(); ++f) {
            if (f > 0) fix << ", ";
            fix << frontier[i].features.features[f];
        }
        fix << "], \"action\": \"charge_low\"}";
    }
    fix << "\n]\n";
    {
        std::ofstream out(dir + "/cleaning_fix.json", std::ios::binary | std::ios::trunc);
        out << fix.str();
    }

    cfsafe::AdvisorConfig advisor;
    advisor.kind = cfsafe::AdvisorKind::scripted;
    advisor.script_path = dir + "/cleaning_fix.json";
    cfsafe::RepairReport report =
        cfsafe::run_pipeline(mdp, unsafe_policy, cfsafe::SafetyProperty{"no_energy"}, advisor);

    std::cout << "frontier size: " << frontier.size() << "\n";
    std::cout << "original: " << cfsafe::format_double17(report.original.value);
    if (report.original.exact_value) {
        std::cout << "  exact " << cfsafe::Prob(*report.original.exact_value).str();
    }
    std::cout << "\nrepaired: " << cfsafe::format_double17(report.repaired.value);
    if (report.repaired.exact_value) {
        std::cout << "  exact " << cfsafe::Prob(*report.repaired.exact_value).str();
    }
    std::cout << "\nstates: " << report.states_before << " -> " << report.states_after << "\n";
    for (const auto& w : report.warnings) std::cout << "warning: " << w << "\n";
    return 0;
}
