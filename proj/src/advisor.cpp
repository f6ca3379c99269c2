#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "cfsafe/advisor.hpp"
#include "cfsafe/prism.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_set>

namespace cfsafe {

using nlohmann::json;

const char* advisor_kind_name(AdvisorKind kind) {
    switch (kind) {
        case AdvisorKind::baseline: return "baseline";
        case AdvisorKind::scripted: return "scripted";
        case AdvisorKind::llm_description: return "llm-desc";
        case AdvisorKind::llm_prism: return "llm-prism";
    }
    return "?";
}

const char* advisor_display_name(AdvisorKind kind) {
    switch (kind) {
        case AdvisorKind::baseline: return "Baseline";
        case AdvisorKind::scripted: return "Scripted";
        case AdvisorKind::llm_description: return "LLM Desc.";
        case AdvisorKind::llm_prism: return "LLM PRISM";
    }
    return "?";
}

AdvisorKind advisor_kind_from_name(const std::string& name) {
    if (name == "baseline") return AdvisorKind::baseline;
    if (name == "scripted") return AdvisorKind::scripted;
    if (name == "llm-desc") return AdvisorKind::llm_description;
    if (name == "llm-prism") return AdvisorKind::llm_prism;
    throw Error(errc::config_error,
                "unknown advisor '" + name + "'; expected baseline, scripted, llm-desc or llm-prism");
}

void validate_config(const AdvisorConfig& config) {
    bool llm = config.kind == AdvisorKind::llm_description || config.kind == AdvisorKind::llm_prism;
    if (llm) {
        if (config.endpoint.empty()) throw Error(errc::config_error, "llm advisors need an endpoint URL");
        if (config.model.empty()) throw Error(errc::config_error, "llm advisors need a model identifier");
        if (config.api_key_env.empty()) {
            throw Error(errc::config_error, "llm advisors need the name of the API key environment variable");
        }
    }
    if (config.kind == AdvisorKind::llm_description && config.description_path.empty()) {
        throw Error(errc::config_error, "the llm-desc advisor needs an environment description file (--desc)");
    }
    if (config.kind == AdvisorKind::scripted && config.script_path.empty()) {
        throw Error(errc::config_error, "the scripted advisor needs a state-to-action file (--script)");
    }
}

const char* advice_status_name(AdviceStatus status) {
    switch (status) {
        case AdviceStatus::ok: return "ok";
        case AdviceStatus::format_error: return "format_error";
        case AdviceStatus::disabled_action: return "disabled_action";
        case AdviceStatus::no_alternative: return "no_alternative";
    }
    return "?";
}

std::string build_prompt(const std::string& env_text, const ViolationRecord& record, const Mdp& mdp) {
    char likelihood[64];
    std::snprintf(likelihood, sizeof likelihood, "%.3g", record.one_step_prob.to_double());

    std::string prompt = env_text;
    if (!prompt.empty() && prompt.back() != '\n') prompt += "\n";
    prompt += "\n";
    prompt += "What went wrong with likelihood ";
    prompt += likelihood;
    prompt += " in the state ";
    prompt += mdp.render_state(record.features);
    prompt += " with action ";
    prompt += record.action;
    prompt += " ending up in ";
    prompt += mdp.render_state(record.witness_features);
    prompt += ". Explain it to me.\n";
    prompt += "\n";
    prompt += "End your answer with a single line: ALTERNATIVE: <one of: ";
    std::vector<std::string> enabled = enabled_actions(mdp, record.features);
    for (std::size_t i = 0; i < enabled.size(); ++i) {
        if (i > 0) prompt += ", ";
        prompt += enabled[i];
    }
    prompt += ">\n";
    return prompt;
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
        throw Error(errc::io_error, "SHA-256 digest failed");
    }
    static const char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(length * 2);
    for (unsigned int i = 0; i < length; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string prompt_cache_key(const std::string& model, const std::string& prompt) {
    // NUL separator keeps (model, prompt) pairs unambiguous
    return sha256_hex(model + '\0' + prompt);
}

Sleeper real_sleeper() {
    return [](double seconds) {
        std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
    };
}

namespace {

std::string read_text_file(const std::string& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(errc::io_error, std::string("cannot open ") + what + " '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string iso8601_now() {
    std::time_t now = std::time(nullptr);
    std::tm utc{};
    gmtime_r(&now, &utc);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
    return buf;
}

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

std::string lowercase(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool mentions_word(const std::string& haystack_lower, const std::string& needle_lower) {
    std::size_t pos = 0;
    while ((pos = haystack_lower.find(needle_lower, pos)) != std::string::npos) {
        bool left_ok = pos == 0 || !is_word_char(haystack_lower[pos - 1]);
        std::size_t end = pos + needle_lower.size();
        bool right_ok = end == haystack_lower.size() || !is_word_char(haystack_lower[end]);
        if (left_ok && right_ok) return true;
        pos += 1;
    }
    return false;
}

// the trailing protocol line: optional whitespace, ALTERNATIVE, colon, token
bool match_alternative_line(const std::string& line, std::string& token_out) {
    std::size_t i = 0;
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    static const std::string keyword = "ALTERNATIVE";
    if (line.compare(i, keyword.size(), keyword) != 0) return false;
    i += keyword.size();
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i >= line.size() || line[i] != ':') return false;
    ++i;
    std::size_t end = line.size();
    while (end > i && std::isspace(static_cast<unsigned char>(line[end - 1]))) --end;
    while (i < end && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    token_out = line.substr(i, end - i);
    return true;
}

}  // namespace

CounterfactualAdvice parse_advice(const std::string& raw, const ViolationRecord& record, const Mdp& mdp) {
    CounterfactualAdvice advice;
    advice.record = record;
    advice.raw = raw;

    std::vector<std::string> lines;
    std::size_t start = 0;
    while (true) {
        std::size_t nl = raw.find('\n', start);
        if (nl == std::string::npos) {
            lines.push_back(raw.substr(start));
            break;
        }
        lines.push_back(raw.substr(start, nl - start));
        start = nl + 1;
    }

    std::vector<std::string> enabled = enabled_actions(mdp, record.features);
    auto canonical_action = [&](const std::string& token) -> const std::string* {
        std::string lower = lowercase(token);
        for (const auto& action : mdp.actions) {
            if (lowercase(action) == lower) return &action;
        }
        return nullptr;
    };

    std::string token;
    std::ptrdiff_t line_index = -1;
    for (std::ptrdiff_t i = static_cast<std::ptrdiff_t>(lines.size()) - 1; i >= 0; --i) {
        if (match_alternative_line(lines[i], token)) {
            line_index = i;
            break;
        }
    }

    if (line_index >= 0) {
        std::string explanation;
        bool first = true;
        for (std::size_t i = 0; i < lines.size(); ++i) {
            if (static_cast<std::ptrdiff_t>(i) == line_index) continue;
            if (!first) explanation += "\n";
            explanation += lines[i];
            first = false;
        }
        advice.explanation = explanation;

        const std::string* action = canonical_action(token);
        if (action == nullptr) {
            advice.status = AdviceStatus::format_error;
            return advice;
        }
        advice.alternative = *action;
        if (*action == record.action) {
            advice.status = AdviceStatus::no_alternative;
        } else if (std::find(enabled.begin(), enabled.end(), *action) == enabled.end()) {
            advice.status = AdviceStatus::disabled_action;
        } else {
            advice.status = AdviceStatus::ok;
        }
        return advice;
    }

    // no protocol line: accept a unique enabled-action mention
    advice.explanation = raw;
    std::string lower = lowercase(raw);
    std::vector<const std::string*> mentioned;
    for (const auto& action : enabled) {
        if (mentions_word(lower, lowercase(action))) mentioned.push_back(&action);
    }
    if (mentioned.size() != 1) {
        advice.status = AdviceStatus::format_error;
        return advice;
    }
    advice.alternative = *mentioned.front();
    advice.status = advice.alternative == record.action ? AdviceStatus::no_alternative : AdviceStatus::ok;
    return advice;
}

LlmClient::LlmClient(AdvisorConfig config, Sleeper sleeper)
    : config_(std::move(config)), sleeper_(std::move(sleeper)) {
    if (config_.cache_dir.empty()) return;
    std::filesystem::create_directories(config_.cache_dir);
    lock_path_ = (std::filesystem::path(config_.cache_dir) / ".lock").string();
    int fd = ::open(lock_path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
        lock_path_.clear();
        throw Error(errc::cache_locked, "cache directory '" + config_.cache_dir +
                                            "' is locked by another run (remove the .lock file if that run died)");
    }
    ::close(fd);
}

LlmClient::~LlmClient() {
    if (!lock_path_.empty()) ::unlink(lock_path_.c_str());
}

std::string LlmClient::cache_path(const std::string& key) const {
    return (std::filesystem::path(config_.cache_dir) / (key + ".json")).string();
}

std::string LlmClient::request(const std::string& prompt) {
    std::string key = prompt_cache_key(config_.model, prompt);

    if (!config_.cache_dir.empty()) {
        std::string path = cache_path(key);
        std::ifstream in(path, std::ios::binary);
        if (in) {
            json doc;
            try {
                doc = json::parse(in);
            } catch (const json::parse_error& e) {
                throw Error(errc::io_error, "corrupt cache file '" + path + "': " + e.what());
            }
            if (!doc.contains("raw") || !doc["raw"].is_string()) {
                throw Error(errc::io_error, "corrupt cache file '" + path + "': missing \"raw\" text");
            }
            return doc["raw"].get<std::string>();
        }
    }

    const char* key_value = std::getenv(config_.api_key_env.c_str());
    if (key_value == nullptr || *key_value == '\0') {
        throw Error(errc::auth_missing,
                    "environment variable " + config_.api_key_env + " is not set and the cache has no answer");
    }

    json body = {
        {"model", config_.model},
        {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
        {"temperature", 0},
    };
    std::string payload = body.dump();

    httplib::Client client(config_.endpoint);
    client.set_connection_timeout(std::chrono::duration<double>(config_.timeout_seconds));
    client.set_read_timeout(std::chrono::duration<double>(config_.timeout_seconds));
    client.set_write_timeout(std::chrono::duration<double>(config_.timeout_seconds));
    client.set_bearer_token_auth(key_value);

    std::string raw;
    int attempt = 0;
    while (true) {
        ++network_calls_;
        httplib::Result res = client.Post("/v1/chat/completions", payload, "application/json");
        bool retryable;
        std::string failure;
        if (!res) {
            retryable = true;
            failure = "transport error: " + httplib::to_string(res.error());
        } else if (res->status == 429 || res->status >= 500) {
            retryable = true;
            failure = "HTTP status " + std::to_string(res->status);
        } else if (res->status != 200) {
            throw Error(errc::http_error, "endpoint replied with HTTP status " + std::to_string(res->status));
        } else {
            json doc;
            try {
                doc = json::parse(res->body);
            } catch (const json::parse_error&) {
                throw Error(errc::malformed_response, "endpoint reply is not JSON");
            }
            if (!doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty() ||
                !doc["choices"][0].contains("message") || !doc["choices"][0]["message"].contains("content") ||
                !doc["choices"][0]["message"]["content"].is_string()) {
                throw Error(errc::malformed_response, "endpoint reply has no completion text");
            }
            raw = doc["choices"][0]["message"]["content"].get<std::string>();
            break;
        }
        if (attempt >= config_.max_retries) {
            throw Error(errc::http_error, failure + " after " + std::to_string(attempt + 1) + " attempts");
        }
        sleeper_(std::ldexp(1.0, attempt));  // 1s, 2s, 4s, ...
        ++attempt;
    }

    if (!config_.cache_dir.empty()) {
        json entry = {
            {"model", config_.model},
            {"prompt", prompt},
            {"raw", raw},
            {"timestamp", iso8601_now()},
        };
        std::string path = cache_path(key);
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(errc::io_error, "cannot write cache file '" + path + "'");
        out << entry.dump(2) << "\n";
    }
    return raw;
}

namespace {

OverrideMap load_script(const std::string& path, const Mdp& mdp) {
    std::string text = read_text_file(path, "scripted advice file");
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(errc::schema_error, path + ": " + e.what());
    }
    if (!doc.is_array()) throw Error(errc::schema_error, path + ": expected a JSON array of entries");
    OverrideMap map;
    for (const auto& entry : doc) {
        if (!entry.is_object() || !entry.contains("state") || !entry.contains("action") || entry.size() != 2) {
            throw Error(errc::schema_error, path + ": each entry needs exactly \"state\" and \"action\"");
        }
        if (!entry["state"].is_array() || !entry["action"].is_string()) {
            throw Error(errc::schema_error, path + ": \"state\" must be an integer array, \"action\" a string");
        }
        std::vector<std::int64_t> features;
        for (const auto& f : entry["state"]) {
            if (!f.is_number_integer()) throw Error(errc::schema_error, path + ": state features must be integers");
            features.push_back(f.get<std::int64_t>());
        }
        std::string action = entry["action"].get<std::string>();
        if (mdp.action_index(action) < 0) {
            throw Error(errc::unknown_action, path + ": action '" + action + "' does not exist in the model");
        }
        FeatureState state(std::move(features));
        if (!map.emplace(std::move(state), std::move(action)).second) {
            throw Error(errc::schema_error, path + ": duplicate state entry");
        }
    }
    return map;
}

}  // namespace

std::vector<CounterfactualAdvice> advise(const AdvisorConfig& config, const Mdp& mdp, const PolicyModel& policy,
                                         const std::vector<ViolationRecord>& records, Sleeper sleeper) {
    validate_config(config);
    std::vector<CounterfactualAdvice> advices;
    advices.reserve(records.size());

    switch (config.kind) {
        case AdvisorKind::baseline: {
            for (const auto& record : records) {
                CounterfactualAdvice advice;
                advice.record = record;
                advice.explanation = "second-ranked action by policy score";
                SecondBest second = second_best(policy, mdp, record.features);
                advice.alternative = second.action;
                if (second.no_alternative || second.action == record.action) {
                    advice.status = AdviceStatus::no_alternative;
                } else {
                    advice.status = AdviceStatus::ok;
                }
                advices.push_back(std::move(advice));
            }
            break;
        }
        case AdvisorKind::scripted: {
            OverrideMap script = load_script(config.script_path, mdp);
            for (const auto& record : records) {
                CounterfactualAdvice advice;
                advice.record = record;
                auto hit = script.find(record.features);
                if (hit == script.end()) {
                    advice.status = AdviceStatus::format_error;
                    advice.explanation = "no scripted entry for this state";
                    advices.push_back(std::move(advice));
                    continue;
                }
                advice.alternative = hit->second;
                advice.explanation = "scripted alternative";
                std::vector<std::string> enabled = enabled_actions(mdp, record.features);
                if (hit->second == record.action) {
                    advice.status = AdviceStatus::no_alternative;
                } else if (std::find(enabled.begin(), enabled.end(), hit->second) == enabled.end()) {
                    advice.status = AdviceStatus::disabled_action;
                } else {
                    advice.status = AdviceStatus::ok;
                }
                advices.push_back(std::move(advice));
            }
            break;
        }
        case AdvisorKind::llm_description:
        case AdvisorKind::llm_prism: {
            std::string env_text = config.kind == AdvisorKind::llm_description
                                       ? read_text_file(config.description_path, "environment description")
                                       : model_excerpt_for_prompt(mdp, config.prism_excerpt_budget);
            LlmClient client(config, std::move(sleeper));
            for (const auto& record : records) {
                std::string prompt = build_prompt(env_text, record, mdp);
                std::string raw = client.request(prompt);
                CounterfactualAdvice advice = parse_advice(raw, record, mdp);
                advice.prompt_sha256 = prompt_cache_key(config.model, prompt);
                advices.push_back(std::move(advice));
            }
            break;
        }
    }
    return advices;
}

}  // namespace cfsafe
