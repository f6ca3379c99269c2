#include "cfsafe/repair.hpp"

#include "cfsafe/jsonout.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unordered_set>

namespace cfsafe {

namespace {

std::string canonical_query(const SafetyProperty& property) {
    return "P=? [ F \"" + property.target_label + "\" ]";
}

std::string three_decimals(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

std::string pad_left(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

bool measurement_increased(const SafetyMeasurement& before, const SafetyMeasurement& after) {
    if (before.exact_value && after.exact_value) return *after.exact_value > *before.exact_value;
    return after.value > before.value;
}

}  // namespace

RepairReport run_pipeline(const Mdp& mdp, const PolicyModel& policy, const SafetyProperty& property,
                          const AdvisorConfig& advisor, const RepairOptions& options, Sleeper sleeper) {
    if (options.passes < 1) throw Error(errc::config_error, "passes must be at least 1");

    RepairReport report;
    report.query = canonical_query(property);
    report.property = property;
    report.method = advisor.kind;

    InducedDtmc chain = build_induced(mdp, policy, {}, options.build);
    report.states_before = chain.size();
    report.original = check(chain, property, options.check);

    std::vector<ViolationRecord> frontier = extract_frontier(chain, property.target_label);
    report.frontier_size = frontier.size();

    std::unordered_set<FeatureState, FeatureStateHash> original_frontier;
    for (const auto& record : frontier) original_frontier.insert(record.features);

    bool patched = false;
    for (int pass = 1; pass <= options.passes; ++pass) {
        if (pass > 1) frontier = extract_frontier(chain, property.target_label);

        std::vector<ViolationRecord> records;
        for (const auto& record : frontier) {
            if (!report.overrides.count(record.features)) records.push_back(record);
        }
        if (records.empty()) break;

        std::vector<CounterfactualAdvice> advices = advise(advisor, mdp, policy, records, sleeper);
        std::size_t added = 0;
        for (const auto& advice : advices) {
            switch (advice.status) {
                case AdviceStatus::ok: ++report.count_ok; break;
                case AdviceStatus::format_error: ++report.count_format_error; break;
                case AdviceStatus::disabled_action: ++report.count_disabled_action; break;
                case AdviceStatus::no_alternative: ++report.count_no_alternative; break;
            }
            if (advice.status == AdviceStatus::ok) {
                report.overrides.emplace(advice.record.features, advice.alternative);
                ++added;
            } else if (options.fallback_baseline) {
                SecondBest second = second_best(policy, mdp, advice.record.features);
                if (!second.no_alternative && second.action != advice.record.action) {
                    report.overrides.emplace(advice.record.features, second.action);
                    ++added;
                    ++report.fallback_overrides;
                }
            }
            report.advices.push_back(advice);
        }
        if (added == 0) break;
        chain = build_induced(mdp, policy, report.overrides, options.build);
        patched = true;
    }

    report.overrides_applied = report.overrides.size();
    report.states_after = chain.size();
    report.repaired = patched ? check(chain, property, options.check) : report.original;

    if (measurement_increased(report.original, report.repaired)) {
        report.warnings.push_back("safety measurement increased: " + format_double_shortest(report.original.value) +
                                  " -> " + format_double_shortest(report.repaired.value));
    }
    if (patched) {
        for (const auto& record : extract_frontier(chain, property.target_label)) {
            if (!original_frontier.count(record.features)) {
                report.warnings.push_back("frontier state " + mdp.render_state(record.features) +
                                          " appeared only after patching");
            }
        }
    }
    return report;
}

std::string render_report_text(const RepairReport& report) {
    const std::string query_header = "PCTL Query";
    const std::string original_header = "Original";
    const std::string method_header = advisor_display_name(report.method);
    const std::string row_label = "P(F \"" + report.property.target_label + "\")";

    std::size_t col0 = std::max(query_header.size(), row_label.size());
    std::size_t col1 = original_header.size();
    std::size_t col2 = method_header.size();

    std::string out;
    out += pad_right(query_header, col0) + "  " + pad_left(original_header, col1) + "  " +
           pad_left(method_header, col2) + "\n";
    out += pad_right(row_label, col0) + "  " + pad_left(three_decimals(report.original.value), col1) + "  " +
           pad_left(three_decimals(report.repaired.value), col2) + "\n";
    out += "\n";
    out += "frontier size: " + std::to_string(report.frontier_size) + "\n";
    out += "advice status: ok=" + std::to_string(report.count_ok) +
           " format_error=" + std::to_string(report.count_format_error) +
           " disabled_action=" + std::to_string(report.count_disabled_action) +
           " no_alternative=" + std::to_string(report.count_no_alternative) + "\n";
    out += "overrides applied: " + std::to_string(report.overrides_applied) + "\n";
    if (report.fallback_overrides > 0) {
        out += "fallback overrides: " + std::to_string(report.fallback_overrides) + "\n";
    }
    out += "state space: " + std::to_string(report.states_before) + " -> " +
           std::to_string(report.states_after) + "\n";
    if (report.frontier_size == 0) out += "note: no repair needed\n";
    for (const auto& warning : report.warnings) out += "warning: " + warning + "\n";
    return out;
}

std::string render_report_json(const RepairReport& report) {
    std::string out;
    out += "{\n";
    out += "  \"query\": " + json_quote(report.query) + ",\n";
    out += "  \"method\": " + json_quote(advisor_kind_name(report.method)) + ",\n";
    out += "  \"original\": " + format_double17(report.original.value) + ",\n";
    if (report.original.exact_value) {
        out += "  \"original_exact\": " + json_quote(Prob(*report.original.exact_value).str()) + ",\n";
    }
    out += "  \"repaired\": " + format_double17(report.repaired.value) + ",\n";
    if (report.repaired.exact_value) {
        out += "  \"repaired_exact\": " + json_quote(Prob(*report.repaired.exact_value).str()) + ",\n";
    }
    out += "  \"frontier_size\": " + std::to_string(report.frontier_size) + ",\n";
    out += "  \"advice\": {\n";
    out += "    \"ok\": " + std::to_string(report.count_ok) + ",\n";
    out += "    \"format_error\": " + std::to_string(report.count_format_error) + ",\n";
    out += "    \"disabled_action\": " + std::to_string(report.count_disabled_action) + ",\n";
    out += "    \"no_alternative\": " + std::to_string(report.count_no_alternative) + "\n";
    out += "  },\n";
    out += "  \"overrides_applied\": " + std::to_string(report.overrides_applied) + ",\n";
    out += "  \"states_before\": " + std::to_string(report.states_before) + ",\n";
    out += "  \"states_after\": " + std::to_string(report.states_after) + ",\n";
    out += "  \"warnings\": [";
    for (std::size_t i = 0; i < report.warnings.size(); ++i) {
        out += i == 0 ? "\n" : ",\n";
        out += "    " + json_quote(report.warnings[i]);
    }
    out += report.warnings.empty() ? "]\n" : "\n  ]\n";
    out += "}\n";
    return out;
}

std::string render_advice_jsonl(const RepairReport& report) {
    std::string out;
    for (const auto& advice : report.advices) {
        const ViolationRecord& record = advice.record;
        std::string line = "{\"state\": [";
        for (std::size_t i = 0; i < record.features.features.size(); ++i) {
            if (i > 0) line += ", ";
            line += std::to_string(record.features.features[i]);
        }
        line += "], \"action\": " + json_quote(record.action);
        line += ", \"one_step_prob\": " + format_double_shortest(record.one_step_prob.to_double());
        line += ", \"witness\": [";
        for (std::size_t i = 0; i < record.witness_features.features.size(); ++i) {
            if (i > 0) line += ", ";
            line += std::to_string(record.witness_features.features[i]);
        }
        line += "], \"witness_prob\": " + format_double_shortest(record.witness_prob.to_double());
        line += ", \"alternative\": " + json_quote(advice.alternative);
        line += ", \"status\": " + json_quote(advice_status_name(advice.status));
        line += ", \"prompt_sha256\": " + json_quote(advice.prompt_sha256);
        line += ", \"explanation\": " + json_quote(advice.explanation);
        line += ", \"raw\": " + json_quote(advice.raw);
        line += "}\n";
        out += line;
    }
    return out;
}

void write_report_files(const RepairReport& report, const std::string& out_dir, const std::string& run_name) {
    std::filesystem::path dir(out_dir.empty() ? "." : out_dir);
    std::filesystem::create_directories(dir);
    auto write = [&](const std::string& suffix, const std::string& content) {
        std::filesystem::path path = dir / (run_name + suffix);
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(errc::io_error, "cannot write report file '" + path.string() + "'");
        out << content;
    };
    write(".report.txt", render_report_text(report));
    write(".report.json", render_report_json(report));
    write(".advice.jsonl", render_advice_jsonl(report));
}

}  // namespace cfsafe
