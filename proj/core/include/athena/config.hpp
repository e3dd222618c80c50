#pragma once

// Run configuration shared by the command-line tools.
//
// Layers, lowest to highest precedence: built-in defaults, a `key = value`
// config file, ATHENA_* environment variables, command-line flags.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace athena {

struct Config {
  double r = 11.0;
  std::int64_t eps_floor_us = 100;
  double align_window_s = 5.0;
  std::string rules_path;  // empty: built-in default rules
  std::string names_path;  // empty: no name table
};

/// One partial layer; unset fields fall through to the layer below.
struct ConfigLayer {
  std::optional<double> r;
  std::optional<std::int64_t> eps_floor_us;
  std::optional<double> align_window_s;
  std::optional<std::string> rules_path;
  std::optional<std::string> names_path;
};

/// Keys: r, eps_floor_us, align_window_s, rules, names. `#` starts a
/// comment. Errors: MalformedLine with the 1-based line number.
ConfigLayer parse_config_file(std::string_view text);

using EnvLookup = std::function<std::optional<std::string>(const char*)>;

/// Reads ATHENA_R, ATHENA_EPS_FLOOR_US, ATHENA_ALIGN_WINDOW_S, ATHENA_RULES
/// and ATHENA_NAMES. Errors: InvalidArgument on unparsable numbers.
ConfigLayer config_from_env(const EnvLookup& lookup);

/// The process environment.
EnvLookup process_env();

/// Applies the layers over the defaults. Errors: InvalidArgument unless
/// r >= 1, eps_floor_us >= 1 and align_window_s > 0.
Config resolve_config(const ConfigLayer& file, const ConfigLayer& env, const ConfigLayer& flags);

}  // namespace athena
