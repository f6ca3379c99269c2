#include "cfsafe/builder.hpp"

#include <deque>
#include <ostream>

namespace cfsafe {

InducedDtmc build_induced(const Mdp& mdp, const PolicyModel& policy, const OverrideMap& overrides,
                          const BuildOptions& options) {
    check_policy_against(policy, mdp);
    if (!mdp.within_bounds(mdp.initial_state)) {
        throw Error(errc::bounds_violation, "initial state " + mdp.render_state(mdp.initial_state) +
                                                " lies outside the declared variable ranges");
    }

    InducedDtmc dtmc;
    ChooseOptions choice{options.strict};

    auto intern = [&](const FeatureState& s) -> std::uint32_t {
        auto it = dtmc.state_index.find(s);
        if (it != dtmc.state_index.end()) return it->second;
        if (dtmc.states.size() >= options.state_cap) {
            throw Error(errc::state_space_limit, "reachable state space exceeds the cap of " +
                                                     std::to_string(options.state_cap) + " states");
        }
        std::uint32_t index = static_cast<std::uint32_t>(dtmc.states.size());
        dtmc.states.push_back(s);
        dtmc.state_index.emplace(s, index);
        return index;
    };

    std::deque<std::uint32_t> frontier;
    frontier.push_back(intern(mdp.initial_state));

    while (!frontier.empty()) {
        std::uint32_t index = frontier.front();
        frontier.pop_front();
        FeatureState state = dtmc.states[index];  // copy: states vector may reallocate below

        if (enabled_actions(mdp, state).empty()) {
            dtmc.chosen_action.push_back(InducedDtmc::deadlock_action);
            dtmc.transitions.push_back({{index, Prob(Rational(1))}});
            dtmc.warnings.push_back("deadlock state " + mdp.render_state(state) +
                                    " made absorbing (self-loop)");
            continue;
        }

        std::string action = choose(policy, overrides, mdp, state, choice);
        Distribution dist = successor_distribution(mdp, state, action);

        std::vector<std::pair<std::uint32_t, Prob>> row;
        row.reserve(dist.size());
        for (const auto& [successor, p] : dist.support()) {
            bool known = dtmc.state_index.count(successor) > 0;
            std::uint32_t target = intern(successor);
            if (!known) frontier.push_back(target);
            row.emplace_back(target, p);
        }
        dtmc.chosen_action.push_back(action);
        dtmc.transitions.push_back(std::move(row));
    }

    for (const auto& label : mdp.labels) {
        std::vector<std::uint32_t> members;
        for (std::uint32_t i = 0; i < dtmc.states.size(); ++i) {
            if (eval_bool(*label.predicate, dtmc.states[i].features)) members.push_back(i);
        }
        dtmc.label_sets.emplace_back(label.name, std::move(members));
    }
    return dtmc;
}

void dump_dtmc(const InducedDtmc& dtmc, std::ostream& out) {
    out << "STATES " << dtmc.states.size() << "\n";
    for (std::size_t i = 0; i < dtmc.states.size(); ++i) {
        out << i << ": " << dtmc.chosen_action[i] << " |";
        for (const auto& [target, p] : dtmc.transitions[i]) {
            out << " " << target << ":" << p.str();
        }
        out << "\n";
    }
    for (const auto& [name, members] : dtmc.label_sets) {
        out << "LABEL " << name << ":";
        for (std::uint32_t index : members) out << " " << index;
        out << "\n";
    }
}

}  // namespace cfsafe
