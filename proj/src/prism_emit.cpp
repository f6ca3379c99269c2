#include "cfsafe/prism.hpp"

#include <vector>

namespace cfsafe {

namespace {

std::string prob_literal(const Prob& p) {
    if (p.is_exact()) return p.str();  // lowest-terms n/d or plain integer
    return format_double17(p.to_double());
}

}  // namespace

std::string emit_normalized(const Mdp& mdp) {
    std::string out = "mdp\n\nmodule " + mdp.module_name + "\n";
    for (const auto& var : mdp.variables) {
        out += "  " + var.name + " : [" + std::to_string(var.lower) + ".." + std::to_string(var.upper) +
               "] init " + std::to_string(var.init) + ";\n";
    }
    for (const auto& cmd : mdp.commands) {
        out += "  [" + cmd.action + "] " + expr_to_string(*cmd.guard) + " -> ";
        for (std::size_t i = 0; i < cmd.updates.size(); ++i) {
            if (i > 0) out += " + ";
            const auto& branch = cmd.updates[i];
            out += prob_literal(branch.probability) + ":";
            for (std::size_t j = 0; j < branch.assignments.size(); ++j) {
                if (j > 0) out += "&";
                const auto& assign = branch.assignments[j];
                out += "(" + assign.var_name + "'=" + expr_to_string(*assign.value) + ")";
            }
        }
        out += ";\n";
    }
    out += "endmodule\n";
    if (!mdp.labels.empty()) {
        out += "\n";
        for (const auto& label : mdp.labels) {  // already sorted by name
            out += "label \"" + label.name + "\" = " + expr_to_string(*label.predicate) + ";\n";
        }
    }
    for (const auto& block : mdp.reward_items) {
        out += "\n" + block + "\n";
    }
    return out;
}

std::string model_excerpt_for_prompt(const Mdp& mdp, std::size_t budget) {
    static const std::string marker = "... (truncated)";
    std::string text = emit_normalized(mdp);
    if (text.size() <= budget) return text;

    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    auto is_boundary = [](const std::string& line) {
        return line == "mdp" || line == "endmodule" || (!line.empty() && line.back() == ';');
    };
    std::string best;
    std::string prefix;
    for (const auto& line : lines) {
        if (!prefix.empty()) prefix += "\n";
        prefix += line;
        if (!is_boundary(line)) continue;
        if (prefix.size() + 1 + marker.size() <= budget) {
            best = prefix;
        } else {
            break;
        }
    }
    if (best.empty()) best = lines.front();  // at minimum the header line
    return best + "\n" + marker;
}

}  // namespace cfsafe
