#pragma once

#include <stdexcept>
#include <string>

namespace cfsafe {

// Every recoverable failure in the toolkit carries one of these codes so
// callers (and the CLI exit-code mapping) can dispatch without string
// matching.
enum class errc {
    // model evaluation
    overlapping_commands,
    bounds_violation,
    disabled_action,
    arithmetic_overflow,
    // policy
    unknown_state,
    no_enabled_action,
    override_disabled,
    schema_error,
    dimension_mismatch,
    unknown_activation,
    unknown_action,
    // builder / checker
    state_space_limit,
    unknown_label,
    no_convergence,
    bad_property,
    // advisor
    auth_missing,
    http_error,
    malformed_response,
    cache_locked,
    // plumbing
    io_error,
    config_error,
};

const char* errc_name(errc code);

class Error : public std::runtime_error {
  public:
    Error(errc code, std::string message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    errc code() const { return code_; }

  private:
    errc code_;
};

}  // namespace cfsafe
