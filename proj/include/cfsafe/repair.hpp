#pragma once

#include "cfsafe/advisor.hpp"
#include "cfsafe/builder.hpp"
#include "cfsafe/checker.hpp"
#include "cfsafe/model.hpp"
#include "cfsafe/policy.hpp"

#include <string>
#include <vector>

namespace cfsafe {

struct RepairOptions {
    int passes = 1;                  // repair rounds; later rounds never overwrite earlier overrides
    bool fallback_baseline = false;  // patch failed advice with the second-best action instead
    BuildOptions build;
    CheckOptions check;
};

struct RepairReport {
    std::string query;  // canonical `P=? [ F "label" ]`
    SafetyProperty property;
    AdvisorKind method = AdvisorKind::baseline;
    SafetyMeasurement original;
    SafetyMeasurement repaired;
    std::vector<CounterfactualAdvice> advices;  // across all passes, in advised order
    std::size_t frontier_size = 0;              // first verification's frontier
    std::size_t count_ok = 0;
    std::size_t count_format_error = 0;
    std::size_t count_disabled_action = 0;
    std::size_t count_no_alternative = 0;
    std::size_t overrides_applied = 0;
    std::size_t fallback_overrides = 0;  // portion of the overrides contributed by the fallback
    std::size_t states_before = 0;
    std::size_t states_after = 0;
    std::vector<std::string> warnings;  // non-monotone repair, frontier states new after patching
    OverrideMap overrides;
};

// verify -> extract -> advise -> patch -> re-verify. Overrides come from ok
// advices only (plus the baseline fallback when enabled); failed records keep
// their original action so the report stays method-pure.
RepairReport run_pipeline(const Mdp& mdp, const PolicyModel& policy, const SafetyProperty& property,
                          const AdvisorConfig& advisor, const RepairOptions& options = {},
                          Sleeper sleeper = real_sleeper());

// Aligned before/after table with three-decimal probabilities plus the run counters.
std::string render_report_text(const RepairReport& report);
// The full structure, 17-significant-digit floats, stable key order.
std::string render_report_json(const RepairReport& report);
// One advice per line, including the raw response text for human review.
std::string render_advice_jsonl(const RepairReport& report);

// Writes <run_name>.report.txt / .report.json / .advice.jsonl into out_dir.
void write_report_files(const RepairReport& report, const std::string& out_dir, const std::string& run_name);

}  // namespace cfsafe
