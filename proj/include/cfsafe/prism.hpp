#pragma once

#include "cfsafe/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cfsafe {

/*
 * Frontend for a single-module subset of the PRISM language:
 *
 *   mdp
 *   const int N = 3;
 *   module name
 *     x : [lo..hi] init v;
 *     [act] guard -> p1:(x'=expr) + p2:(x'=expr)&(y'=expr);
 *   endmodule
 *   label "name" = expr;
 *   rewards ... endrewards        // retained verbatim, never interpreted
 *
 * Guards use = != < <= > >= & | ! ( ) over variables, constants, integer
 * literals and true/false; update expressions use + - * integer arithmetic.
 * Probabilities are rational literals: 0.5, 1/3, 1.
 */

struct ModelSource {
    std::string text;
    std::string origin = "<inline>";

    static ModelSource from_file(const std::string& path);
};

enum class Severity { error, warning };

struct ParseDiagnostic {
    Severity severity = Severity::error;
    int line = 0;    // 1-based
    int column = 0;  // 1-based
    std::string message;
};

struct ParseResult {
    std::optional<Mdp> mdp;
    std::vector<ParseDiagnostic> diagnostics;

    bool ok() const { return mdp.has_value(); }
};

// Accepts the subset above. Labels are stored sorted by name so that parse,
// emit and re-parse agree on ordering. A model is returned iff there are no
// diagnostics.
ParseResult parse_model(const ModelSource& src);

// Deterministic canonical re-print: normalized whitespace, probabilities in
// lowest terms, labels sorted. parse_model(emit_normalized(m)) equals m.
std::string emit_normalized(const Mdp& mdp);

// Normalized model text cut down to `budget` characters at a statement
// boundary, with a trailing "... (truncated)" marker when cut.
std::string model_excerpt_for_prompt(const Mdp& mdp, std::size_t budget);

// "1.1" for 11/10, "5" for 5/1, "5/6" when the decimal does not terminate.
std::string rational_display(const Rational& r);

}  // namespace cfsafe
