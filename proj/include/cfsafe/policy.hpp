#pragma once

#include "cfsafe/model.hpp"

#include <string>
#include <unordered_map>
#include <vector>

namespace cfsafe {

// Loaded memoryless deterministic policy: either a tabular state -> score
// table or a feedforward scorer (inference only). Policy files are JSON, see
// load_policy.
enum class PolicyKind { tabular, mlp };
enum class Activation { relu, identity };

struct MlpLayer {
    std::vector<std::vector<double>> weights;  // rows = outputs, cols = inputs
    std::vector<double> bias;
    Activation activation = Activation::identity;
};

struct PolicyModel {
    PolicyKind kind = PolicyKind::tabular;
    std::vector<std::string> action_order;  // score index -> action name
    std::unordered_map<FeatureState, std::vector<double>, FeatureStateHash> entries;  // tabular
    std::vector<MlpLayer> layers;                                                     // mlp

    // Raw scores in action_order. Tabular lookup misses raise UnknownState.
    // The forward pass runs in double precision with fixed-order accumulation
    // so rankings are reproducible across platforms.
    std::vector<double> score(const FeatureState& s) const;
};

// state -> replacement action, applied on top of the base policy during
// re-verification. Built once per repair pass, then read-only.
using OverrideMap = std::unordered_map<FeatureState, std::string, FeatureStateHash>;

struct RankedAction {
    std::string action;
    double score = 0.0;
};

// Scores restricted to the actions enabled in `state`, descending; ties
// resolved by global action order (earlier declaration wins).
struct PolicyRanking {
    FeatureState state;
    std::vector<RankedAction> scored;
};

// Parses and validates a policy document. Tabular:
//   {"type":"tabular","actions":[...],"entries":[{"state":[ints],"q":[reals]},...]}
// MLP:
//   {"type":"mlp","actions":[...],"layers":[{"w":[[reals]],"b":[reals],"act":"relu"|"id"},...]}
// Field names are exact; unknown fields are rejected.
PolicyModel load_policy(const std::string& path);
PolicyModel parse_policy(const std::string& json_text, const std::string& origin);

// Pipeline-start validation: the policy's action set must equal the model's,
// and an mlp input dimension must equal the state dimension.
void check_policy_against(const PolicyModel& policy, const Mdp& mdp);

PolicyRanking rank_actions(const PolicyModel& policy, const Mdp& mdp, const FeatureState& s);

struct ChooseOptions {
    // With strict set, a raw argmax that lands on a disabled action is an
    // error instead of being masked away; used to diagnose policy/model
    // drift.
    bool strict = false;
};

// overrides[s] when present (validated enabled), else the top-ranked action.
std::string choose(const PolicyModel& policy, const OverrideMap& overrides, const Mdp& mdp,
                   const FeatureState& s, const ChooseOptions& options = {});

struct SecondBest {
    std::string action;
    bool no_alternative = false;  // set when only one action was available
};

// Rank-2 entry of the ranking; rank 1 with the flag set when no alternative
// exists.
SecondBest second_best(const PolicyModel& policy, const Mdp& mdp, const FeatureState& s);

}  // namespace cfsafe
