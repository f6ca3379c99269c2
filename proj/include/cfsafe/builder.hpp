#pragma once

#include "cfsafe/model.hpp"
#include "cfsafe/policy.hpp"

#include <cstddef>
#include <iosfwd>
#include <string>

namespace cfsafe {

struct BuildOptions {
    std::size_t state_cap = 5'000'000;
    bool strict = false;  // forwarded to the policy's action choice
};

// Resolves the policy against the model: breadth-first exploration from the
// initial state, one chosen action per state. Deadlocked states become
// absorbing with a self-loop of probability one and are reported in
// warnings. Throws when the reachable space exceeds options.state_cap.
InducedDtmc build_induced(const Mdp& mdp, const PolicyModel& policy, const OverrideMap& overrides,
                          const BuildOptions& options = {});

// Plain-text dump:
//   STATES n
//   i: action | j1:p1 j2:p2 ...
//   LABEL name: i1 i2 ...
void dump_dtmc(const InducedDtmc& dtmc, std::ostream& out);

}  // namespace cfsafe
