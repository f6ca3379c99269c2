#pragma once

#include "cfsafe/errors.hpp"
#include "cfsafe/expr.hpp"
#include "cfsafe/rational.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

namespace cfsafe {

// A state is the vector of integer feature values, one per declared
// variable, in declaration order. Value-equal states are the same state;
// states are used as hash keys throughout.
struct FeatureState {
    std::vector<std::int64_t> features;

    FeatureState() = default;
    explicit FeatureState(std::vector<std::int64_t> f) : features(std::move(f)) {}

    bool operator==(const FeatureState& other) const { return features == other.features; }
    std::size_t dimension() const { return features.size(); }
};

struct FeatureStateHash {
    std::size_t operator()(const FeatureState& s) const {
        std::size_t h = 1469598103934665603ull;  // FNV-1a
        for (std::int64_t f : s.features) {
            h ^= static_cast<std::size_t>(f);
            h *= 1099511628211ull;
        }
        return h;
    }
};

// Probability distribution over successor states. Entries over identical
// successors are merged on insertion; insertion order of first occurrence is
// preserved so output stays deterministic.
class Distribution {
  public:
    void add(FeatureState state, Prob p);

    const std::vector<std::pair<FeatureState, Prob>>& support() const { return support_; }
    bool empty() const { return support_.empty(); }
    std::size_t size() const { return support_.size(); }

    Prob total() const;
    // true when the mass sums to 1: exactly in rational mode, within 1e-9
    // otherwise.
    bool sums_to_one() const;

  private:
    std::vector<std::pair<FeatureState, Prob>> support_;
    std::unordered_map<FeatureState, std::size_t, FeatureStateHash> index_;
};

struct VariableDecl {
    std::string name;
    std::int64_t lower = 0;
    std::int64_t upper = 0;
    std::int64_t init = 0;
};

// One parallel assignment x' = expr inside an update branch.
struct Assignment {
    int var_index = -1;
    std::string var_name;
    ExprPtr value;
};

struct UpdateBranch {
    Prob probability;
    std::vector<Assignment> assignments;  // unlisted variables keep their value
};

struct Command {
    std::string action;
    ExprPtr guard;
    std::vector<UpdateBranch> updates;
    int source_line = 0;  // position of the command in the model source, 0 if built in memory
};

struct LabelDecl {
    std::string name;
    ExprPtr predicate;
};

// Explicit factored-state MDP. `actions` is the global action order: first
// appearance across command declarations; it defines the score index used by
// policy files.
struct Mdp {
    std::string module_name = "main";
    std::vector<VariableDecl> variables;
    FeatureState initial_state;
    std::vector<std::string> actions;
    std::vector<Command> commands;
    std::vector<LabelDecl> labels;           // declaration order
    std::vector<std::string> reward_items;   // opaque `rewards ... endrewards` blocks, unused

    int action_index(const std::string& name) const;
    const LabelDecl* find_label(const std::string& name) const;
    bool within_bounds(const FeatureState& s) const;

    // `[x=0, y=2]` rendering in variable declaration order, used by prompts
    // and reports.
    std::string render_state(const FeatureState& s) const;
};

bool mdp_equal(const Mdp& a, const Mdp& b);

struct SafetyProperty {
    std::string target_label;  // query kind: reachability, the only kind
};

// Policy-resolved Markov chain over the reachable states. Index order is BFS
// discovery order. Every transition target is itself a member state.
struct InducedDtmc {
    static constexpr const char* deadlock_action = "<deadlock>";

    std::vector<FeatureState> states;
    std::unordered_map<FeatureState, std::uint32_t, FeatureStateHash> state_index;
    std::vector<std::string> chosen_action;                                // per state
    std::vector<std::vector<std::pair<std::uint32_t, Prob>>> transitions;  // per state, by target index
    std::vector<std::pair<std::string, std::vector<std::uint32_t>>> label_sets;  // model label order
    std::vector<std::string> warnings;  // e.g. deadlock states made absorbing

    std::size_t size() const { return states.size(); }
    const std::vector<std::uint32_t>* find_label_set(const std::string& name) const;
    // true when every transition probability is an exact rational
    bool all_exact() const;
};

// Actions with at least one command whose guard holds in s, in global action
// order. Empty result is allowed; deadlock handling belongs to the builder.
std::vector<std::string> enabled_actions(const Mdp& mdp, const FeatureState& s);

// Resolves action a in state s to its successor distribution. Exactly one
// command for a may be enabled in s; two enabled commands sharing the action
// are a modeling error.
Distribution successor_distribution(const Mdp& mdp, const FeatureState& s, const std::string& a);

}  // namespace cfsafe
