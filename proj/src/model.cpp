#include "cfsafe/model.hpp"

#include <cmath>
#include <cstdio>

namespace cfsafe {

void Distribution::add(FeatureState state, Prob p) {
    auto it = index_.find(state);
    if (it != index_.end()) {
        support_[it->second].second += p;
        return;
    }
    index_.emplace(state, support_.size());
    support_.emplace_back(std::move(state), std::move(p));
}

Prob Distribution::total() const {
    Prob sum;
    for (const auto& [state, p] : support_) sum += p;
    return sum;
}

bool Distribution::sums_to_one() const {
    Prob sum = total();
    if (sum.is_exact()) return sum.rational() == 1;
    return std::abs(sum.to_double() - 1.0) <= 1e-9;
}

int Mdp::action_index(const std::string& name) const {
    for (std::size_t i = 0; i < actions.size(); ++i) {
        if (actions[i] == name) return static_cast<int>(i);
    }
    return -1;
}

const LabelDecl* Mdp::find_label(const std::string& name) const {
    for (const auto& label : labels) {
        if (label.name == name) return &label;
    }
    return nullptr;
}

bool Mdp::within_bounds(const FeatureState& s) const {
    if (s.features.size() != variables.size()) return false;
    for (std::size_t i = 0; i < variables.size(); ++i) {
        if (s.features[i] < variables[i].lower || s.features[i] > variables[i].upper) return false;
    }
    return true;
}

std::string Mdp::render_state(const FeatureState& s) const {
    std::string out = "[";
    for (std::size_t i = 0; i < variables.size(); ++i) {
        if (i > 0) out += ", ";
        out += variables[i].name;
        out += "=";
        out += std::to_string(s.features[i]);
    }
    out += "]";
    return out;
}

bool mdp_equal(const Mdp& a, const Mdp& b) {
    if (a.module_name != b.module_name) return false;
    if (a.variables.size() != b.variables.size()) return false;
    for (std::size_t i = 0; i < a.variables.size(); ++i) {
        const auto& va = a.variables[i];
        const auto& vb = b.variables[i];
        if (va.name != vb.name || va.lower != vb.lower || va.upper != vb.upper || va.init != vb.init) return false;
    }
    if (!(a.initial_state == b.initial_state)) return false;
    if (a.actions != b.actions) return false;
    if (a.commands.size() != b.commands.size()) return false;
    for (std::size_t i = 0; i < a.commands.size(); ++i) {
        const auto& ca = a.commands[i];
        const auto& cb = b.commands[i];
        if (ca.action != cb.action || !expr_equal(*ca.guard, *cb.guard)) return false;
        if (ca.updates.size() != cb.updates.size()) return false;
        for (std::size_t j = 0; j < ca.updates.size(); ++j) {
            const auto& ua = ca.updates[j];
            const auto& ub = cb.updates[j];
            if (!(ua.probability == ub.probability)) return false;
            if (ua.probability.is_exact() != ub.probability.is_exact()) return false;
            if (ua.assignments.size() != ub.assignments.size()) return false;
            for (std::size_t k = 0; k < ua.assignments.size(); ++k) {
                if (ua.assignments[k].var_index != ub.assignments[k].var_index) return false;
                if (!expr_equal(*ua.assignments[k].value, *ub.assignments[k].value)) return false;
            }
        }
    }
    if (a.labels.size() != b.labels.size()) return false;
    for (std::size_t i = 0; i < a.labels.size(); ++i) {
        if (a.labels[i].name != b.labels[i].name) return false;
        if (!expr_equal(*a.labels[i].predicate, *b.labels[i].predicate)) return false;
    }
    return a.reward_items == b.reward_items;
}

const std::vector<std::uint32_t>* InducedDtmc::find_label_set(const std::string& name) const {
    for (const auto& [label, set] : label_sets) {
        if (label == name) return &set;
    }
    return nullptr;
}

bool InducedDtmc::all_exact() const {
    for (const auto& row : transitions) {
        for (const auto& [target, p] : row) {
            if (!p.is_exact()) return false;
        }
    }
    return true;
}

std::vector<std::string> enabled_actions(const Mdp& mdp, const FeatureState& s) {
    std::vector<std::string> result;
    for (const auto& action : mdp.actions) {
        for (const auto& cmd : mdp.commands) {
            if (cmd.action != action) continue;
            if (eval_bool(*cmd.guard, s.features)) {
                result.push_back(action);
                break;
            }
        }
    }
    return result;
}

Distribution successor_distribution(const Mdp& mdp, const FeatureState& s, const std::string& a) {
    const Command* enabled = nullptr;
    for (const auto& cmd : mdp.commands) {
        if (cmd.action != a) continue;
        if (!eval_bool(*cmd.guard, s.features)) continue;
        if (enabled != nullptr) {
            throw Error(errc::overlapping_commands,
                        "action '" + a + "' has two enabled commands in state " + mdp.render_state(s));
        }
        enabled = &cmd;
    }
    if (enabled == nullptr) {
        throw Error(errc::disabled_action, "action '" + a + "' is not enabled in state " + mdp.render_state(s));
    }

    Distribution dist;
    for (const auto& branch : enabled->updates) {
        FeatureState next = s;
        for (const auto& assign : branch.assignments) {
            next.features[static_cast<std::size_t>(assign.var_index)] = eval_int(*assign.value, s.features);
        }
        for (std::size_t i = 0; i < mdp.variables.size(); ++i) {
            const auto& var = mdp.variables[i];
            if (next.features[i] < var.lower || next.features[i] > var.upper) {
                throw Error(errc::bounds_violation,
                            "update of action '" + a + "' drives " + var.name + " to " +
                                std::to_string(next.features[i]) + ", outside [" + std::to_string(var.lower) +
                                ".." + std::to_string(var.upper) + "] from state " + mdp.render_state(s));
            }
        }
        dist.add(std::move(next), branch.probability);
    }
    if (!dist.sums_to_one()) {
        throw Error(errc::config_error,
                    "probabilities of action '" + a + "' sum to " + dist.total().str() + " in state " +
                        mdp.render_state(s));
    }
    return dist;
}

}  // namespace cfsafe
