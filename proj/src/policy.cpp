#include "cfsafe/policy.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace cfsafe {

using nlohmann::json;

namespace {

void require_keys(const json& obj, std::initializer_list<const char*> keys, const std::string& where) {
    for (const char* key : keys) {
        if (!obj.contains(key)) {
            throw Error(errc::schema_error, where + ": missing field \"" + key + "\"");
        }
    }
    for (const auto& [key, value] : obj.items()) {
        if (std::find_if(keys.begin(), keys.end(), [&](const char* k) { return key == k; }) == keys.end()) {
            throw Error(errc::schema_error, where + ": unknown field \"" + key + "\"");
        }
    }
}

std::vector<std::string> parse_actions(const json& doc, const std::string& where) {
    if (!doc["actions"].is_array() || doc["actions"].empty()) {
        throw Error(errc::schema_error, where + ": \"actions\" must be a non-empty array");
    }
    std::vector<std::string> actions;
    std::unordered_set<std::string> seen;
    for (const auto& a : doc["actions"]) {
        if (!a.is_string()) throw Error(errc::schema_error, where + ": action names must be strings");
        if (!seen.insert(a.get<std::string>()).second) {
            throw Error(errc::schema_error, where + ": duplicate action \"" + a.get<std::string>() + "\"");
        }
        actions.push_back(a.get<std::string>());
    }
    return actions;
}

std::vector<double> parse_real_array(const json& arr, const std::string& where) {
    if (!arr.is_array()) throw Error(errc::schema_error, where + " must be an array of reals");
    std::vector<double> out;
    for (const auto& v : arr) {
        if (!v.is_number()) throw Error(errc::schema_error, where + " must contain only numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

}  // namespace

PolicyModel parse_policy(const std::string& json_text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw Error(errc::schema_error, origin + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("type") || !doc["type"].is_string()) {
        throw Error(errc::schema_error, origin + ": expected an object with a \"type\" field");
    }
    std::string type = doc["type"].get<std::string>();
    PolicyModel policy;

    if (type == "tabular") {
        require_keys(doc, {"type", "actions", "entries"}, origin);
        policy.kind = PolicyKind::tabular;
        policy.action_order = parse_actions(doc, origin);
        if (!doc["entries"].is_array()) throw Error(errc::schema_error, origin + ": \"entries\" must be an array");
        std::size_t dimension = 0;
        for (const auto& entry : doc["entries"]) {
            if (!entry.is_object()) throw Error(errc::schema_error, origin + ": entries must be objects");
            require_keys(entry, {"state", "q"}, origin + ": entry");
            if (!entry["state"].is_array()) throw Error(errc::schema_error, origin + ": \"state\" must be an array");
            std::vector<std::int64_t> features;
            for (const auto& f : entry["state"]) {
                if (!f.is_number_integer()) {
                    throw Error(errc::schema_error, origin + ": state features must be integers");
                }
                features.push_back(f.get<std::int64_t>());
            }
            if (dimension == 0) dimension = features.size();
            if (features.empty() || features.size() != dimension) {
                throw Error(errc::dimension_mismatch, origin + ": inconsistent state dimension in entries");
            }
            std::vector<double> q = parse_real_array(entry["q"], origin + ": \"q\"");
            if (q.size() != policy.action_order.size()) {
                throw Error(errc::dimension_mismatch,
                            origin + ": \"q\" length " + std::to_string(q.size()) + " does not match " +
                                std::to_string(policy.action_order.size()) + " actions");
            }
            FeatureState state(std::move(features));
            if (!policy.entries.emplace(std::move(state), std::move(q)).second) {
                throw Error(errc::schema_error, origin + ": duplicate state entry");
            }
        }
        return policy;
    }

    if (type == "mlp") {
        require_keys(doc, {"type", "actions", "layers"}, origin);
        policy.kind = PolicyKind::mlp;
        policy.action_order = parse_actions(doc, origin);
        if (!doc["layers"].is_array() || doc["layers"].empty()) {
            throw Error(errc::schema_error, origin + ": \"layers\" must be a non-empty array");
        }
        std::size_t layer_no = 0;
        std::size_t prev_outputs = 0;
        for (const auto& layer_doc : doc["layers"]) {
            ++layer_no;
            std::string where = origin + ": layer " + std::to_string(layer_no);
            if (!layer_doc.is_object()) throw Error(errc::schema_error, where + " must be an object");
            require_keys(layer_doc, {"w", "b", "act"}, where);
            MlpLayer layer;
            if (!layer_doc["w"].is_array() || layer_doc["w"].empty()) {
                throw Error(errc::schema_error, where + ": \"w\" must be a non-empty matrix");
            }
            std::size_t cols = 0;
            for (const auto& row : layer_doc["w"]) {
                std::vector<double> r = parse_real_array(row, where + ": \"w\" row");
                if (cols == 0) cols = r.size();
                if (r.empty() || r.size() != cols) {
                    throw Error(errc::dimension_mismatch, where + ": ragged weight matrix");
                }
                layer.weights.push_back(std::move(r));
            }
            layer.bias = parse_real_array(layer_doc["b"], where + ": \"b\"");
            if (layer.bias.size() != layer.weights.size()) {
                throw Error(errc::dimension_mismatch, where + ": bias length does not match row count");
            }
            if (!layer_doc["act"].is_string()) throw Error(errc::schema_error, where + ": \"act\" must be a string");
            std::string act = layer_doc["act"].get<std::string>();
            if (act == "relu") {
                layer.activation = Activation::relu;
            } else if (act == "id") {
                layer.activation = Activation::identity;
            } else {
                throw Error(errc::unknown_activation, where + ": unknown activation \"" + act + "\"");
            }
            if (prev_outputs != 0 && cols != prev_outputs) {
                throw Error(errc::dimension_mismatch, "dimension mismatch at layer " + std::to_string(layer_no) +
                                                          ": expected input " + std::to_string(prev_outputs) +
                                                          ", got " + std::to_string(cols));
            }
            prev_outputs = layer.weights.size();
            policy.layers.push_back(std::move(layer));
        }
        if (prev_outputs != policy.action_order.size()) {
            throw Error(errc::dimension_mismatch,
                        origin + ": final layer outputs " + std::to_string(prev_outputs) + ", expected " +
                            std::to_string(policy.action_order.size()) + " action scores");
        }
        return policy;
    }

    throw Error(errc::schema_error, origin + ": unknown policy type \"" + type + "\"");
}

PolicyModel load_policy(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(errc::io_error, "cannot open policy file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_policy(buf.str(), path);
}

std::vector<double> PolicyModel::score(const FeatureState& s) const {
    if (kind == PolicyKind::tabular) {
        auto it = entries.find(s);
        if (it == entries.end()) {
            throw Error(errc::unknown_state, "tabular policy has no entry for state; policy/model mismatch");
        }
        return it->second;
    }
    std::vector<double> current(s.features.begin(), s.features.end());
    for (const auto& layer : layers) {
        if (current.size() != layer.weights.front().size()) {
            throw Error(errc::dimension_mismatch, "mlp input dimension " + std::to_string(layer.weights.front().size()) +
                                                      " does not match state dimension " +
                                                      std::to_string(current.size()));
        }
        std::vector<double> next(layer.weights.size());
        for (std::size_t j = 0; j < layer.weights.size(); ++j) {
            double acc = layer.bias[j];
            const auto& row = layer.weights[j];
            for (std::size_t i = 0; i < row.size(); ++i) acc += row[i] * current[i];
            next[j] = layer.activation == Activation::relu ? (acc > 0.0 ? acc : 0.0) : acc;
        }
        current = std::move(next);
    }
    return current;
}

void check_policy_against(const PolicyModel& policy, const Mdp& mdp) {
    for (const auto& action : policy.action_order) {
        if (mdp.action_index(action) < 0) {
            throw Error(errc::unknown_action, "policy action '" + action + "' does not exist in the model");
        }
    }
    for (const auto& action : mdp.actions) {
        if (std::find(policy.action_order.begin(), policy.action_order.end(), action) == policy.action_order.end()) {
            throw Error(errc::unknown_action, "model action '" + action + "' has no policy score");
        }
    }
    if (policy.kind == PolicyKind::mlp && !policy.layers.empty()) {
        std::size_t input = policy.layers.front().weights.front().size();
        if (input != mdp.variables.size()) {
            throw Error(errc::dimension_mismatch, "mlp expects input dimension " + std::to_string(input) +
                                                      " but the model has " + std::to_string(mdp.variables.size()) +
                                                      " variables");
        }
    }
}

PolicyRanking rank_actions(const PolicyModel& policy, const Mdp& mdp, const FeatureState& s) {
    std::vector<std::string> enabled = enabled_actions(mdp, s);
    if (enabled.empty()) {
        throw Error(errc::no_enabled_action, "no action enabled in state " + mdp.render_state(s));
    }
    std::vector<double> scores = policy.score(s);

    PolicyRanking ranking;
    ranking.state = s;
    for (const auto& action : enabled) {  // global action order
        auto it = std::find(policy.action_order.begin(), policy.action_order.end(), action);
        if (it == policy.action_order.end()) {
            throw Error(errc::unknown_action, "policy provides no score for action '" + action + "'");
        }
        ranking.scored.push_back({action, scores[static_cast<std::size_t>(it - policy.action_order.begin())]});
    }
    // stable: equal scores keep global action order
    std::stable_sort(ranking.scored.begin(), ranking.scored.end(),
                     [](const RankedAction& a, const RankedAction& b) { return a.score > b.score; });
    return ranking;
}

std::string choose(const PolicyModel& policy, const OverrideMap& overrides, const Mdp& mdp,
                   const FeatureState& s, const ChooseOptions& options) {
    auto ov = overrides.find(s);
    if (ov != overrides.end()) {
        for (const auto& action : enabled_actions(mdp, s)) {
            if (action == ov->second) return action;
        }
        throw Error(errc::override_disabled,
                    "override action '" + ov->second + "' is not enabled in state " + mdp.render_state(s));
    }
    PolicyRanking ranking = rank_actions(policy, mdp, s);
    if (options.strict) {
        // unmasked argmax, ties broken by global action order
        std::vector<double> scores = policy.score(s);
        std::size_t best = 0;
        int best_global = mdp.action_index(policy.action_order[0]);
        for (std::size_t i = 1; i < scores.size(); ++i) {
            int global = mdp.action_index(policy.action_order[i]);
            if (scores[i] > scores[best] || (scores[i] == scores[best] && global < best_global)) {
                best = i;
                best_global = global;
            }
        }
        std::vector<std::string> enabled = enabled_actions(mdp, s);
        if (std::find(enabled.begin(), enabled.end(), policy.action_order[best]) == enabled.end()) {
            throw Error(errc::disabled_action, "policy argmax '" + policy.action_order[best] +
                                                   "' is not enabled in state " + mdp.render_state(s));
        }
    }
    return ranking.scored.front().action;
}

SecondBest second_best(const PolicyModel& policy, const Mdp& mdp, const FeatureState& s) {
    PolicyRanking ranking = rank_actions(policy, mdp, s);
    if (ranking.scored.size() >= 2) return {ranking.scored[1].action, false};
    return {ranking.scored[0].action, true};
}

}  // namespace cfsafe
