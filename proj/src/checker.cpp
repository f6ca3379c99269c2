#include "cfsafe/checker.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <regex>
#include <unordered_map>

namespace cfsafe {

namespace {

// raised inside elimination when the fill-in budget is exhausted or a pivot
// degenerates; check() falls back to value iteration
struct EliminationBail {
    std::string reason;
};

template <typename Scalar>
Scalar prob_as(const Prob& p);
template <>
Rational prob_as<Rational>(const Prob& p) { return p.rational(); }
template <>
double prob_as<double>(const Prob& p) { return p.to_double(); }

template <typename Scalar>
constexpr std::size_t entry_cost();
template <>
constexpr std::size_t entry_cost<Rational>() { return 128; }  // two bignums + node overhead
template <>
constexpr std::size_t entry_cost<double>() { return 48; }

// Solves (I - A) x = b for the unknown states by sparse Gaussian elimination
// in ascending index order. The matrix is a substochastic M-matrix (every
// unknown state reaches a target), so the pivots stay positive and no
// pivoting is required.
template <typename Scalar>
std::vector<Scalar> eliminate(const InducedDtmc& dtmc, const std::vector<char>& is_target,
                              const std::vector<char>& is_unknown, const std::vector<std::uint32_t>& unknowns,
                              std::size_t max_entries) {
    const std::size_t m = unknowns.size();
    std::vector<std::uint32_t> compact(dtmc.size(), 0);
    for (std::size_t k = 0; k < m; ++k) compact[unknowns[k]] = static_cast<std::uint32_t>(k);

    std::vector<std::unordered_map<std::uint32_t, Scalar>> rows(m);
    std::vector<Scalar> rhs(m, Scalar(0));
    std::vector<std::vector<std::uint32_t>> col_users(m);
    std::size_t entries = 0;

    for (std::size_t k = 0; k < m; ++k) {
        auto& row = rows[k];
        row[static_cast<std::uint32_t>(k)] = Scalar(1);
        for (const auto& [target, p] : dtmc.transitions[unknowns[k]]) {
            if (is_target[target]) {
                rhs[k] += prob_as<Scalar>(p);
            } else if (is_unknown[target]) {
                row[compact[target]] -= prob_as<Scalar>(p);
            }
        }
        for (const auto& [col, v] : row) {
            if (col != k) col_users[col].push_back(static_cast<std::uint32_t>(k));
        }
        entries += row.size();
    }
    if (entries > max_entries) throw EliminationBail{"initial system exceeds the memory budget"};

    for (std::uint32_t k = 0; k < m; ++k) {
        auto& pivot_row = rows[k];
        auto pivot_it = pivot_row.find(k);
        if (pivot_it == pivot_row.end() || pivot_it->second == Scalar(0)) {
            throw EliminationBail{"pivot vanished at row " + std::to_string(k)};
        }
        Scalar pivot = pivot_it->second;
        for (auto& [col, v] : pivot_row) v /= pivot;
        rhs[k] /= pivot;

        for (std::uint32_t r : col_users[k]) {
            if (r <= k) continue;
            auto& row = rows[r];
            auto hit = row.find(k);
            if (hit == row.end()) continue;  // filled in and cancelled earlier
            Scalar factor = hit->second;
            row.erase(hit);
            --entries;
            if (factor == Scalar(0)) continue;
            rhs[r] -= factor * rhs[k];
            for (const auto& [col, v] : pivot_row) {
                if (col <= k) continue;
                auto [it, fresh] = row.try_emplace(col, Scalar(0));
                it->second -= factor * v;
                if (fresh) {
                    ++entries;
                    col_users[col].push_back(r);
                } else if (it->second == Scalar(0)) {
                    row.erase(it);
                    --entries;
                }
            }
        }
        col_users[k].clear();
        col_users[k].shrink_to_fit();
        if (entries > max_entries) throw EliminationBail{"fill-in exceeds the memory budget"};
    }

    std::vector<Scalar> x(m, Scalar(0));
    for (std::uint32_t k = static_cast<std::uint32_t>(m); k-- > 0;) {
        Scalar acc = rhs[k];
        for (const auto& [col, v] : rows[k]) {
            if (col > k) acc -= v * x[col];
        }
        x[k] = acc;
        rows[k].clear();
    }
    return x;
}

// Gauss-Seidel sweeps on the same system, double precision.
std::vector<double> iterate(const InducedDtmc& dtmc, const std::vector<char>& is_target,
                            const std::vector<char>& is_unknown, const std::vector<std::uint32_t>& unknowns,
                            const CheckOptions& options, std::size_t& sweeps_out, double& residual_out) {
    const std::size_t m = unknowns.size();
    std::vector<std::uint32_t> compact(dtmc.size(), 0);
    for (std::size_t k = 0; k < m; ++k) compact[unknowns[k]] = static_cast<std::uint32_t>(k);

    // per-row: constant term, self-loop weight, off-diagonal entries
    std::vector<double> b(m, 0.0);
    std::vector<double> self(m, 0.0);
    std::vector<std::vector<std::pair<std::uint32_t, double>>> coeff(m);
    for (std::size_t k = 0; k < m; ++k) {
        for (const auto& [target, p] : dtmc.transitions[unknowns[k]]) {
            double w = p.to_double();
            if (is_target[target]) {
                b[k] += w;
            } else if (is_unknown[target]) {
                if (compact[target] == k) {
                    self[k] += w;
                } else {
                    coeff[k].emplace_back(compact[target], w);
                }
            }
        }
    }

    std::vector<double> x(m, 0.0);
    for (std::size_t sweep = 1; sweep <= options.max_sweeps; ++sweep) {
        double max_diff = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            double acc = b[k];
            for (const auto& [col, w] : coeff[k]) acc += w * x[col];
            double next = acc / (1.0 - self[k]);
            max_diff = std::max(max_diff, std::fabs(next - x[k]));
            x[k] = next;
        }
        if (max_diff <= options.tolerance) {
            sweeps_out = sweep;
            residual_out = max_diff;
            return x;
        }
    }
    throw Error(errc::no_convergence, "value iteration did not reach tolerance " +
                                          format_double_shortest(options.tolerance) + " within " +
                                          std::to_string(options.max_sweeps) + " sweeps");
}

}  // namespace

SafetyProperty parse_property_query(const std::string& text) {
    static const std::regex form(R"re(^\s*P\s*=\s*\?\s*\[\s*F\s*"([^"]*)"\s*\]\s*$)re");
    std::smatch match;
    if (!std::regex_match(text, match, form)) {
        throw Error(errc::bad_property, "unsupported property '" + text +
                                            "'; the only accepted form is P=? [ F \"label\" ]");
    }
    return SafetyProperty{match[1].str()};
}

SafetyMeasurement check(const InducedDtmc& dtmc, const SafetyProperty& property, const CheckOptions& options) {
    const std::vector<std::uint32_t>* members = dtmc.find_label_set(property.target_label);
    if (members == nullptr) {
        throw Error(errc::unknown_label, "label \"" + property.target_label + "\" is not declared in the model");
    }
    const std::size_t n = dtmc.size();
    std::vector<char> is_target(n, 0);
    for (std::uint32_t i : *members) is_target[i] = 1;

    // backward reachability from the target set: anything not reached has
    // probability exactly 0
    std::vector<std::vector<std::uint32_t>> predecessors(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        for (const auto& [target, p] : dtmc.transitions[i]) {
            (void)p;
            predecessors[target].push_back(i);
        }
    }
    std::vector<char> reaches(n, 0);
    std::deque<std::uint32_t> queue;
    for (std::uint32_t i : *members) {
        reaches[i] = 1;
        queue.push_back(i);
    }
    while (!queue.empty()) {
        std::uint32_t i = queue.front();
        queue.pop_front();
        for (std::uint32_t pred : predecessors[i]) {
            if (!reaches[pred]) {
                reaches[pred] = 1;
                queue.push_back(pred);
            }
        }
    }
    predecessors.clear();
    predecessors.shrink_to_fit();

    std::vector<char> is_unknown(n, 0);
    std::vector<std::uint32_t> unknowns;
    for (std::uint32_t i = 0; i < n; ++i) {
        if (!is_target[i] && reaches[i]) {
            is_unknown[i] = 1;
            unknowns.push_back(i);
        }
    }

    SafetyMeasurement result;
    result.property = property;
    result.state_values.assign(n, 0.0);
    for (std::uint32_t i : *members) result.state_values[i] = 1.0;

    const bool exact_probs = dtmc.all_exact();
    const bool may_eliminate = options.force != CheckOptions::Force::value_iteration;
    const bool forced_elimination = options.force == CheckOptions::Force::elimination;

    if (unknowns.empty()) {
        result.mode = exact_probs ? ArithmeticMode::exact_rational : ArithmeticMode::floating;
        result.solver = SolverKind::elimination;
        if (result.mode == ArithmeticMode::exact_rational) {
            result.exact_value = Rational(is_target[0] ? 1 : 0);
        }
        result.value = result.state_values[0];
        return result;
    }

    bool solved = false;
    if (may_eliminate) {
        std::size_t max_entries = forced_elimination
                                      ? std::numeric_limits<std::size_t>::max()
                                      : options.memory_budget_bytes /
                                            (exact_probs ? entry_cost<Rational>() : entry_cost<double>());
        try {
            if (exact_probs) {
                std::vector<Rational> x =
                    eliminate<Rational>(dtmc, is_target, is_unknown, unknowns, max_entries);
                for (std::size_t k = 0; k < unknowns.size(); ++k) {
                    if (x[k] < 0 || x[k] > 1) {
                        throw Error(errc::no_convergence, "solver produced a probability outside [0,1]");
                    }
                    result.state_values[unknowns[k]] = x[k].convert_to<double>();
                }
                result.mode = ArithmeticMode::exact_rational;
                result.exact_value = is_target[0]               ? Rational(1)
                                     : !is_unknown[0]           ? Rational(0)
                                                                : x[std::distance(unknowns.begin(),
                                                                                  std::find(unknowns.begin(),
                                                                                            unknowns.end(), 0u))];
            } else {
                std::vector<double> x = eliminate<double>(dtmc, is_target, is_unknown, unknowns, max_entries);
                for (std::size_t k = 0; k < unknowns.size(); ++k) {
                    if (x[k] < -1e-9 || x[k] > 1.0 + 1e-9) {
                        throw Error(errc::no_convergence, "solver produced a probability outside [0,1]");
                    }
                    result.state_values[unknowns[k]] = std::clamp(x[k], 0.0, 1.0);
                }
                result.mode = ArithmeticMode::floating;
            }
            result.solver = SolverKind::elimination;
            solved = true;
        } catch (const EliminationBail& bail) {
            if (forced_elimination) {
                throw Error(errc::no_convergence, "elimination failed: " + bail.reason);
            }
        }
    }

    if (!solved) {
        std::size_t sweeps = 0;
        double residual = 0.0;
        std::vector<double> x = iterate(dtmc, is_target, is_unknown, unknowns, options, sweeps, residual);
        for (std::size_t k = 0; k < unknowns.size(); ++k) {
            result.state_values[unknowns[k]] = std::clamp(x[k], 0.0, 1.0);
        }
        result.mode = ArithmeticMode::floating;
        result.solver = SolverKind::value_iteration;
        result.iterations = sweeps;
        result.residual = residual;
    }

    result.value = result.state_values[0];
    return result;
}

std::vector<ViolationRecord> extract_frontier(const InducedDtmc& dtmc, const std::string& target_label) {
    const std::vector<std::uint32_t>* members = dtmc.find_label_set(target_label);
    if (members == nullptr) {
        throw Error(errc::unknown_label, "label \"" + target_label + "\" is not declared in the model");
    }
    std::vector<char> is_target(dtmc.size(), 0);
    for (std::uint32_t i : *members) is_target[i] = 1;

    std::vector<ViolationRecord> frontier;
    for (std::uint32_t i = 0; i < dtmc.size(); ++i) {
        if (is_target[i]) continue;
        Prob total(Rational(0));
        bool have_witness = false;
        std::uint32_t witness = 0;
        Prob witness_prob(Rational(0));
        for (const auto& [target, p] : dtmc.transitions[i]) {
            if (!is_target[target]) continue;
            total += p;
            if (!have_witness || p > witness_prob) {
                have_witness = true;
                witness = target;
                witness_prob = p;
            }
        }
        if (!have_witness || total.is_zero()) continue;
        ViolationRecord record;
        record.state = i;
        record.features = dtmc.states[i];
        record.action = dtmc.chosen_action[i];
        record.one_step_prob = total;
        record.witness_target = witness;
        record.witness_features = dtmc.states[witness];
        record.witness_prob = witness_prob;
        frontier.push_back(record);
    }
    return frontier;
}

}  // namespace cfsafe
