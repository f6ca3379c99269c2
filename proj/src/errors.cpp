#include "cfsafe/errors.hpp"

namespace cfsafe {

const char* errc_name(errc code) {
    switch (code) {
        case errc::overlapping_commands: return "OverlappingCommands";
        case errc::bounds_violation: return "BoundsViolation";
        case errc::disabled_action: return "DisabledAction";
        case errc::arithmetic_overflow: return "ArithmeticOverflow";
        case errc::unknown_state: return "UnknownState";
        case errc::no_enabled_action: return "NoEnabledAction";
        case errc::override_disabled: return "OverrideDisabled";
        case errc::schema_error: return "SchemaError";
        case errc::dimension_mismatch: return "DimensionMismatch";
        case errc::unknown_activation: return "UnknownActivation";
        case errc::unknown_action: return "UnknownAction";
        case errc::state_space_limit: return "StateSpaceLimit";
        case errc::unknown_label: return "UnknownLabel";
        case errc::no_convergence: return "NoConvergence";
        case errc::bad_property: return "BadProperty";
        case errc::auth_missing: return "AuthMissing";
        case errc::http_error: return "HttpError";
        case errc::malformed_response: return "MalformedResponse";
        case errc::cache_locked: return "CacheLocked";
        case errc::io_error: return "IoError";
        case errc::config_error: return "ConfigError";
    }
    return "Error";
}

}  // namespace cfsafe
