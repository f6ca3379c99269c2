#pragma once

#include <string>

namespace cfsafe {

// Quoted, escaped JSON string literal. Reports and transcripts are written by
// hand so the output bytes stay stable across library upgrades.
std::string json_quote(const std::string& s);

}  // namespace cfsafe
