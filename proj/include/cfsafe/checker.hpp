#pragma once

#include "cfsafe/model.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace cfsafe {

enum class ArithmeticMode { exact_rational, floating };
enum class SolverKind { elimination, value_iteration };

struct CheckOptions {
    double tolerance = 1e-12;                              // value-iteration stop criterion
    std::size_t max_sweeps = 1'000'000;
    std::size_t memory_budget_bytes = 2ull * 1024 * 1024 * 1024;  // elimination fill-in cap
    enum class Force { automatic, elimination, value_iteration };
    Force force = Force::automatic;
};

struct SafetyMeasurement {
    SafetyProperty property;
    double value = 0.0;                     // reachability probability from the initial state
    std::optional<Rational> exact_value;    // present in exact mode
    std::vector<double> state_values;       // per DTMC state index
    ArithmeticMode mode = ArithmeticMode::floating;
    SolverKind solver = SolverKind::elimination;
    std::size_t iterations = 0;             // sweeps used by value iteration
    double residual = 0.0;                  // last sweep's max update
};

// P(eventually reaching the labelled states) for every state. Target states
// get 1, states with no path to a target get 0, the rest is the solution of
// the induced linear system. Exact rational arithmetic whenever all
// transition probabilities are exact and elimination stays inside the memory
// budget; otherwise floating point, falling back to value iteration when
// elimination fill-in would exceed the budget.
SafetyMeasurement check(const InducedDtmc& dtmc, const SafetyProperty& property,
                        const CheckOptions& options = {});

// A state whose chosen action can enter the target set in one step.
struct ViolationRecord {
    std::uint32_t state = 0;          // DTMC index
    FeatureState features;
    std::string action;               // action the policy picked there
    Prob one_step_prob;               // total mass into the target set
    std::uint32_t witness_target = 0; // the most likely target successor
    FeatureState witness_features;
    Prob witness_prob;                // probability of that branch
};

// Non-target states with positive one-step mass into the target set, in
// ascending state index order.
std::vector<ViolationRecord> extract_frontier(const InducedDtmc& dtmc, const std::string& target_label);

// Accepts exactly the reachability query form `P=? [ F "label" ]`.
SafetyProperty parse_property_query(const std::string& text);

}  // namespace cfsafe
