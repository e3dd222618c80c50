#include "athena/config.hpp"

#include <cstdlib>

#include "athena/errors.hpp"
#include "text_util.hpp"

namespace athena {

namespace {

double number(std::string_view key, std::string_view value, ErrorCode code,
              std::optional<std::size_t> line) {
  auto v = detail::parse_double(value);
  if (!v) throw Error(code, std::string(key) + ": not a number: '" + std::string(value) + "'", line);
  return *v;
}

std::int64_t integer(std::string_view key, std::string_view value, ErrorCode code,
                     std::optional<std::size_t> line) {
  auto v = detail::parse_int<std::int64_t>(value);
  if (!v) {
    throw Error(code, std::string(key) + ": not an integer: '" + std::string(value) + "'", line);
  }
  return *v;
}

void overlay(ConfigLayer& into, const ConfigLayer& from) {
  if (from.r) into.r = from.r;
  if (from.eps_floor_us) into.eps_floor_us = from.eps_floor_us;
  if (from.align_window_s) into.align_window_s = from.align_window_s;
  if (from.rules_path) into.rules_path = from.rules_path;
  if (from.names_path) into.names_path = from.names_path;
}

}  // namespace

ConfigLayer parse_config_file(std::string_view text) {
  ConfigLayer out;
  std::size_t line_no = 0;
  for (std::string_view raw : detail::lines(text)) {
    ++line_no;
    std::string_view line = raw.substr(0, raw.find('#'));
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::MalformedLine, "expected 'key = value'", line_no);
    }
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    if (value.empty()) throw Error(ErrorCode::MalformedLine, "empty value", line_no);
    if (key == "r") {
      out.r = number(key, value, ErrorCode::MalformedLine, line_no);
    } else if (key == "eps_floor_us") {
      out.eps_floor_us = integer(key, value, ErrorCode::MalformedLine, line_no);
    } else if (key == "align_window_s") {
      out.align_window_s = number(key, value, ErrorCode::MalformedLine, line_no);
    } else if (key == "rules") {
      out.rules_path = std::string(value);
    } else if (key == "names") {
      out.names_path = std::string(value);
    } else {
      throw Error(ErrorCode::MalformedLine, "unknown key '" + std::string(key) + "'", line_no);
    }
  }
  return out;
}

ConfigLayer config_from_env(const EnvLookup& lookup) {
  ConfigLayer out;
  if (auto v = lookup("ATHENA_R")) {
    out.r = number("ATHENA_R", *v, ErrorCode::InvalidArgument, std::nullopt);
  }
  if (auto v = lookup("ATHENA_EPS_FLOOR_US")) {
    out.eps_floor_us = integer("ATHENA_EPS_FLOOR_US", *v, ErrorCode::InvalidArgument, std::nullopt);
  }
  if (auto v = lookup("ATHENA_ALIGN_WINDOW_S")) {
    out.align_window_s = number("ATHENA_ALIGN_WINDOW_S", *v, ErrorCode::InvalidArgument, std::nullopt);
  }
  if (auto v = lookup("ATHENA_RULES")) out.rules_path = *v;
  if (auto v = lookup("ATHENA_NAMES")) out.names_path = *v;
  return out;
}

EnvLookup process_env() {
  return [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (!v) return std::nullopt;
    return std::string(v);
  };
}

Config resolve_config(const ConfigLayer& file, const ConfigLayer& env, const ConfigLayer& flags) {
  ConfigLayer merged;
  overlay(merged, file);
  overlay(merged, env);
  overlay(merged, flags);
  Config c;
  if (merged.r) c.r = *merged.r;
  if (merged.eps_floor_us) c.eps_floor_us = *merged.eps_floor_us;
  if (merged.align_window_s) c.align_window_s = *merged.align_window_s;
  if (merged.rules_path) c.rules_path = *merged.rules_path;
  if (merged.names_path) c.names_path = *merged.names_path;
  if (!(c.r >= 1.0)) throw Error(ErrorCode::InvalidArgument, "r must be >= 1");
  if (c.eps_floor_us < 1) throw Error(ErrorCode::InvalidArgument, "eps_floor_us must be >= 1");
  if (!(c.align_window_s > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "align_window_s must be positive");
  }
  return c;
}

}  // namespace athena
