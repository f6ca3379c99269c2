#pragma once

#include "cfsafe/checker.hpp"
#include "cfsafe/model.hpp"
#include "cfsafe/policy.hpp"

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace cfsafe {

enum class AdvisorKind { baseline, scripted, llm_description, llm_prism };

const char* advisor_kind_name(AdvisorKind kind);      // CLI spelling: baseline, scripted, llm-desc, llm-prism
const char* advisor_display_name(AdvisorKind kind);   // report column: Baseline, Scripted, LLM Desc., LLM PRISM
AdvisorKind advisor_kind_from_name(const std::string& name);

struct AdvisorConfig {
    AdvisorKind kind = AdvisorKind::baseline;
    std::string endpoint = "https://api.openai.com";  // base URL; requests go to /v1/chat/completions
    std::string model;
    std::string api_key_env = "CF_SAFE_API_KEY";
    std::string description_path;  // llm-description input text
    std::string script_path;       // scripted state -> action mapping
    std::string cache_dir;         // empty disables the response cache
    double timeout_seconds = 30.0;
    int max_retries = 3;
    std::size_t prism_excerpt_budget = 6000;  // char cap on the model text sent to llm-prism prompts
};

// Throws errc::config_error when required fields for the kind are missing.
void validate_config(const AdvisorConfig& config);

enum class AdviceStatus { ok, format_error, disabled_action, no_alternative };
const char* advice_status_name(AdviceStatus status);

struct CounterfactualAdvice {
    ViolationRecord record;
    std::string explanation;
    std::string alternative = "none";  // canonical action name, or "none"
    AdviceStatus status = AdviceStatus::format_error;
    std::string raw;            // untouched response text (llm kinds)
    std::string prompt_sha256;  // empty for baseline/scripted
};

// Deterministic prompt: environment text, the what-went-wrong sentence for
// the record (likelihood with 3 significant digits, states as
// [name=value, ...]), and the fixed reply-format instruction listing the
// actions enabled at the record's state.
std::string build_prompt(const std::string& env_text, const ViolationRecord& record, const Mdp& mdp);

std::string sha256_hex(const std::string& bytes);
// Cache key for a (model, prompt) pair; also the cache file's basename.
std::string prompt_cache_key(const std::string& model, const std::string& prompt);

using Sleeper = std::function<void(double seconds)>;
Sleeper real_sleeper();

// Chat-completion client. Responses are cached on disk by prompt_cache_key;
// a cache hit needs neither the API key nor the network. Retries 429/5xx and
// transport failures with exponential backoff (1s base, factor 2). Holding a
// client locks the cache directory against concurrent runs.
class LlmClient {
  public:
    explicit LlmClient(AdvisorConfig config, Sleeper sleeper = real_sleeper());
    ~LlmClient();
    LlmClient(const LlmClient&) = delete;
    LlmClient& operator=(const LlmClient&) = delete;

    std::string request(const std::string& prompt);
    int network_calls() const { return network_calls_; }

  private:
    std::string cache_path(const std::string& key) const;

    AdvisorConfig config_;
    Sleeper sleeper_;
    std::string lock_path_;
    int network_calls_ = 0;
};

// Classifies a raw response against the record's state: the last
// `ALTERNATIVE: <action>` line wins; without one, a unique enabled-action
// mention counts. Never throws — failures become statuses.
CounterfactualAdvice parse_advice(const std::string& raw, const ViolationRecord& record, const Mdp& mdp);

// One advice per record, in record order.
std::vector<CounterfactualAdvice> advise(const AdvisorConfig& config, const Mdp& mdp, const PolicyModel& policy,
                                         const std::vector<ViolationRecord>& records,
                                         Sleeper sleeper = real_sleeper());

}  // namespace cfsafe
