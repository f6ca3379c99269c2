#pragma once

// Independent reference implementations used to cross-check the main code
// paths: a dense long-double linear solve (vs. the sparse checker) and a
// naive fixpoint exploration (vs. the breadth-first builder), plus a
// deterministic random-model generator that drives both.

#include "cfsafe/builder.hpp"
#include "cfsafe/checker.hpp"
#include "cfsafe/model.hpp"
#include "cfsafe/policy.hpp"

#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace cfsafe::oracle {

// Reachability values for every chain state by dense Gaussian elimination
// with partial pivoting (long double). Target/zero classification uses edge
// relaxation, not the checker's backward search.
std::vector<double> dense_reach(const InducedDtmc& dtmc, const std::string& target_label);

// Reachable feature-state set by worklist fixpoint over the policy's chosen
// actions; deadlocks contribute no successors.
std::set<std::vector<std::int64_t>> naive_reachable(const Mdp& mdp, const PolicyModel& policy,
                                                    const OverrideMap& overrides);

struct GeneratedCase {
    std::string model_text;   // full source over one variable x
    std::string policy_json;  // tabular scores covering every x value
    std::string target_label;
};

// Random single-variable MDP (<= 200 states, <= 4 actions) with exact
// rational transition probabilities, plus a random tabular policy over it.
GeneratedCase generate_case(std::mt19937& rng);

}  // namespace cfsafe::oracle
