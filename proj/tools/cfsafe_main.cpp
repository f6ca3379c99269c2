#include <CLI11.hpp>
#include <json.hpp>

#include "cfsafe/advisor.hpp"
#include "cfsafe/builder.hpp"
#include "cfsafe/checker.hpp"
#include "cfsafe/jsonout.hpp"
#include "cfsafe/policy.hpp"
#include "cfsafe/prism.hpp"
#include "cfsafe/repair.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using cfsafe::Error;
using cfsafe::errc;

int exit_code_for(const Error& error) {
    switch (error.code()) {
        case errc::auth_missing:
        case errc::http_error:
        case errc::malformed_response:
        case errc::cache_locked:
            return 3;  // advisor / network
        case errc::io_error:
        case errc::config_error:
        case errc::bad_property:
            return 1;  // usage / config
        default:
            return 2;  // verification / model
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(errc::io_error, "cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// JSON config file: same keys as the long flags, CLI values win.
class ConfigFile {
  public:
    void load(const std::string& path) {
        if (path.empty()) return;
        try {
            doc_ = nlohmann::json::parse(read_file(path));
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(errc::config_error, path + ": " + e.what());
        }
        if (!doc_.is_object()) throw Error(errc::config_error, path + ": config must be a JSON object");
        path_ = path;
    }

    template <typename T>
    void fill(const CLI::Option* option, const char* key, T& target) const {
        if (path_.empty() || option->count() > 0 || !doc_.contains(key)) return;
        try {
            target = doc_[key].get<T>();
        } catch (const nlohmann::json::exception&) {
            throw Error(errc::config_error, path_ + ": bad value for \"" + std::string(key) + "\"");
        }
    }

  private:
    nlohmann::json doc_;
    std::string path_;
};

struct CommonArgs {
    std::string model_path;
    std::string policy_path;
    std::string property;
    std::string config_path;
    bool strict = false;
    std::size_t state_cap = cfsafe::BuildOptions{}.state_cap;

    CLI::Option* strict_opt = nullptr;
    CLI::Option* cap_opt = nullptr;

    void attach(CLI::App* cmd) {
        cmd->add_option("model-file", model_path, "model file")->required();
        cmd->add_option("policy-file", policy_path, "policy file (JSON)")->required();
        cmd->add_option("query", property, "reachability query, e.g. P=? [ F \"bad\" ]")->required();
        cmd->add_option("--config", config_path, "JSON config file; command-line flags take precedence");
        strict_opt = cmd->add_flag("--strict", strict, "fail when the policy's best action is disabled");
        cap_opt = cmd->add_option("--state-cap", state_cap, "abort beyond this many reachable states");
    }

    void merge(const ConfigFile& config) {
        config.fill(strict_opt, "strict", strict);
        config.fill(cap_opt, "state-cap", state_cap);
    }
};

struct Loaded {
    cfsafe::Mdp mdp;
    cfsafe::PolicyModel policy;
    cfsafe::SafetyProperty property;
};

Loaded load_inputs(const CommonArgs& args) {
    cfsafe::SafetyProperty property = cfsafe::parse_property_query(args.property);

    cfsafe::ParseResult result = cfsafe::parse_model(cfsafe::ModelSource::from_file(args.model_path));
    if (!result.ok()) {
        for (const auto& d : result.diagnostics) {
            std::cerr << args.model_path << ":" << d.line << ":" << d.column << ": "
                      << (d.severity == cfsafe::Severity::error ? "error" : "warning") << ": " << d.message
                      << "\n";
        }
        throw Error(errc::schema_error, "model '" + args.model_path + "' has errors");
    }
    cfsafe::PolicyModel policy = cfsafe::load_policy(args.policy_path);
    return Loaded{std::move(*result.mdp), std::move(policy), std::move(property)};
}

void print_warnings(const cfsafe::InducedDtmc& chain) {
    for (const auto& warning : chain.warnings) std::cerr << "warning: " << warning << "\n";
}

int cmd_check(const CommonArgs& args, const std::string& emit_dtmc, const std::string& solver, double tol) {
    Loaded in = load_inputs(args);
    cfsafe::BuildOptions build{args.state_cap, args.strict};
    cfsafe::InducedDtmc chain = cfsafe::build_induced(in.mdp, in.policy, {}, build);
    print_warnings(chain);

    cfsafe::CheckOptions options;
    options.tolerance = tol;
    if (solver == "elimination") {
        options.force = cfsafe::CheckOptions::Force::elimination;
    } else if (solver == "value-iteration") {
        options.force = cfsafe::CheckOptions::Force::value_iteration;
    } else if (solver != "auto") {
        throw Error(errc::config_error, "unknown solver '" + solver + "'");
    }
    cfsafe::SafetyMeasurement m = cfsafe::check(chain, in.property, options);

    if (!emit_dtmc.empty()) {
        std::ofstream out(emit_dtmc, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(errc::io_error, "cannot write '" + emit_dtmc + "'");
        cfsafe::dump_dtmc(chain, out);
    }
    std::cout << cfsafe::format_double_shortest(m.value) << "\n";
    return 0;
}

int cmd_extract(const CommonArgs& args) {
    Loaded in = load_inputs(args);
    cfsafe::BuildOptions build{args.state_cap, args.strict};
    cfsafe::InducedDtmc chain = cfsafe::build_induced(in.mdp, in.policy, {}, build);
    print_warnings(chain);

    for (const auto& record : cfsafe::extract_frontier(chain, in.property.target_label)) {
        std::string line = "{\"state\": [";
        for (std::size_t i = 0; i < record.features.features.size(); ++i) {
            if (i > 0) line += ", ";
            line += std::to_string(record.features.features[i]);
        }
        line += "], \"action\": " + cfsafe::json_quote(record.action);
        line += ", \"one_step_prob\": " + cfsafe::format_double_shortest(record.one_step_prob.to_double());
        line += ", \"witness\": [";
        for (std::size_t i = 0; i < record.witness_features.features.size(); ++i) {
            if (i > 0) line += ", ";
            line += std::to_string(record.witness_features.features[i]);
        }
        line += "], \"witness_prob\": " + cfsafe::format_double_shortest(record.witness_prob.to_double());
        line += "}";
        std::cout << line << "\n";
    }
    return 0;
}

struct RepairArgs {
    std::string advisor;
    std::string desc;
    std::string script;
    std::string endpoint = cfsafe::AdvisorConfig{}.endpoint;
    std::string model_name;
    std::string api_key_env = cfsafe::AdvisorConfig{}.api_key_env;
    std::string cache_dir;
    double timeout = cfsafe::AdvisorConfig{}.timeout_seconds;
    int retries = cfsafe::AdvisorConfig{}.max_retries;
    std::size_t excerpt_budget = cfsafe::AdvisorConfig{}.prism_excerpt_budget;
    int passes = 1;
    bool fallback_baseline = false;
    std::string run_name;
    std::string out_dir = ".";
};

int cmd_repair(const CommonArgs& args, const RepairArgs& repair) {
    if (repair.advisor.empty()) {
        throw Error(errc::config_error, "choose an advisor with --advisor baseline|scripted|llm-desc|llm-prism");
    }
    Loaded in = load_inputs(args);

    cfsafe::AdvisorConfig advisor;
    advisor.kind = cfsafe::advisor_kind_from_name(repair.advisor);
    advisor.endpoint = repair.endpoint;
    advisor.model = repair.model_name;
    advisor.api_key_env = repair.api_key_env;
    advisor.description_path = repair.desc;
    advisor.script_path = repair.script;
    advisor.cache_dir = repair.cache_dir;
    advisor.timeout_seconds = repair.timeout;
    advisor.max_retries = repair.retries;
    advisor.prism_excerpt_budget = repair.excerpt_budget;
    cfsafe::validate_config(advisor);

    cfsafe::RepairOptions options;
    options.passes = repair.passes;
    options.fallback_baseline = repair.fallback_baseline;
    options.build = cfsafe::BuildOptions{args.state_cap, args.strict};

    cfsafe::RepairReport report = cfsafe::run_pipeline(in.mdp, in.policy, in.property, advisor, options);

    std::string run_name = repair.run_name;
    if (run_name.empty()) {
        run_name = std::filesystem::path(args.model_path).stem().string() + "-" + repair.advisor;
    }
    cfsafe::write_report_files(report, repair.out_dir, run_name);
    std::cout << cfsafe::render_report_text(report);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"verify a policy's induced Markov chain, explain violations, patch and re-verify"};
    app.require_subcommand(1);

    CommonArgs check_args;
    std::string emit_dtmc;
    std::string solver = "auto";
    double tol = cfsafe::CheckOptions{}.tolerance;
    CLI::App* check_cmd = app.add_subcommand("check", "compute the reachability probability");
    check_args.attach(check_cmd);
    CLI::Option* emit_opt = check_cmd->add_option("--emit-dtmc", emit_dtmc, "dump the induced chain to a file");
    CLI::Option* solver_opt =
        check_cmd->add_option("--solver", solver, "auto | elimination | value-iteration (default auto)");
    CLI::Option* tol_opt = check_cmd->add_option("--tol", tol, "value-iteration tolerance");

    CommonArgs extract_args;
    CLI::App* extract_cmd = app.add_subcommand("extract", "list states whose chosen action can violate in one step");
    extract_args.attach(extract_cmd);

    CommonArgs repair_args;
    RepairArgs repair;
    CLI::App* repair_cmd = app.add_subcommand("repair", "verify, advise alternatives, patch and re-verify");
    repair_args.attach(repair_cmd);
    CLI::Option* advisor_opt =
        repair_cmd->add_option("--advisor", repair.advisor, "baseline | scripted | llm-desc | llm-prism");
    CLI::Option* desc_opt = repair_cmd->add_option("--desc", repair.desc, "environment description file (llm-desc)");
    CLI::Option* script_opt = repair_cmd->add_option("--script", repair.script, "state-to-action file (scripted)");
    CLI::Option* endpoint_opt = repair_cmd->add_option("--endpoint", repair.endpoint, "chat-completions base URL");
    CLI::Option* model_opt = repair_cmd->add_option("--model", repair.model_name, "model identifier");
    CLI::Option* key_opt =
        repair_cmd->add_option("--api-key-env", repair.api_key_env, "environment variable holding the API key");
    CLI::Option* cache_opt = repair_cmd->add_option("--cache", repair.cache_dir, "response cache directory");
    CLI::Option* timeout_opt = repair_cmd->add_option("--timeout", repair.timeout, "request timeout in seconds");
    CLI::Option* retries_opt = repair_cmd->add_option("--retries", repair.retries, "maximum request retries");
    CLI::Option* budget_opt =
        repair_cmd->add_option("--excerpt-budget", repair.excerpt_budget, "character cap for llm-prism model text");
    CLI::Option* passes_opt = repair_cmd->add_option("--passes", repair.passes, "repair rounds (default 1)");
    CLI::Option* fallback_opt = repair_cmd->add_flag("--fallback-baseline", repair.fallback_baseline,
                                                     "patch failed advice with the second-best action");
    CLI::Option* run_opt = repair_cmd->add_option("--run-name", repair.run_name, "report file prefix");
    CLI::Option* out_opt = repair_cmd->add_option("--out-dir", repair.out_dir, "directory for report files");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (check_cmd->parsed()) {
            ConfigFile config;
            config.load(check_args.config_path);
            check_args.merge(config);
            config.fill(emit_opt, "emit-dtmc", emit_dtmc);
            config.fill(solver_opt, "solver", solver);
            config.fill(tol_opt, "tol", tol);
            return cmd_check(check_args, emit_dtmc, solver, tol);
        }
        if (extract_cmd->parsed()) {
            ConfigFile config;
            config.load(extract_args.config_path);
            extract_args.merge(config);
            return cmd_extract(extract_args);
        }
        ConfigFile config;
        config.load(repair_args.config_path);
        repair_args.merge(config);
        config.fill(advisor_opt, "advisor", repair.advisor);
        config.fill(desc_opt, "desc", repair.desc);
        config.fill(script_opt, "script", repair.script);
        config.fill(endpoint_opt, "endpoint", repair.endpoint);
        config.fill(model_opt, "model", repair.model_name);
        config.fill(key_opt, "api-key-env", repair.api_key_env);
        config.fill(cache_opt, "cache", repair.cache_dir);
        config.fill(timeout_opt, "timeout", repair.timeout);
        config.fill(retries_opt, "retries", repair.retries);
        config.fill(budget_opt, "excerpt-budget", repair.excerpt_budget);
        config.fill(passes_opt, "passes", repair.passes);
        config.fill(fallback_opt, "fallback-baseline", repair.fallback_baseline);
        config.fill(run_opt, "run-name", repair.run_name);
        config.fill(out_opt, "out-dir", repair.out_dir);
        return cmd_repair(repair_args, repair);
    } catch (const Error& e) {
        if (*e.what() != '\0') std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
