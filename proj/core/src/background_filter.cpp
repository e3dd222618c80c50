#include "athena/background_filter.hpp"

#include <fnmatch.h>

#include <set>
#include <tuple>

#include "athena/errors.hpp"
#include "text_util.hpp"

namespace athena {

std::string_view to_string(Category c) {
  switch (c) {
    case Category::ManagementService: return "ManagementService";
    case Category::SignalUpdate: return "SignalUpdate";
    case Category::RandomNoise: return "RandomNoise";
    case Category::Foreground: return "Foreground";
  }
  return "Foreground";
}

std::optional<Category> parse_category(std::string_view token) {
  for (auto c : {Category::ManagementService, Category::SignalUpdate, Category::RandomNoise,
                 Category::Foreground}) {
    if (token == to_string(c)) return c;
  }
  return std::nullopt;
}

bool BackgroundRule::matches(const BasePacket& p) const {
  if (port && *port != p.server_port) return false;
  if (protocol && *protocol != p.protocol) return false;
  if (direction && *direction != p.direction) return false;
  if (name_glob == "*") return true;
  return ::fnmatch(name_glob.c_str(), p.server_name.c_str(), 0) == 0;
}

std::optional<Category> well_known_category(std::uint16_t port, Protocol protocol) {
  if (protocol.is_tcp()) {
    if (port == 22) return Category::ManagementService;
    if (port == 80) return Category::SignalUpdate;
  } else if (protocol.is_udp()) {
    if (port == 53 || port == 123) return Category::ManagementService;
    if (port == 5353) return Category::RandomNoise;
  }
  return std::nullopt;
}

BackgroundRuleSet default_rules() {
  const std::tuple<std::uint16_t, Protocol> ports[] = {
      {22, Protocol::tcp()}, {53, Protocol::udp()}, {80, Protocol::tcp()},
      {123, Protocol::udp()}, {5353, Protocol::udp()}};
  BackgroundRuleSet set;
  for (auto [port, proto] : ports) {
    set.rules.push_back({*well_known_category(port, proto), "*", port, proto, std::nullopt});
  }
  return set;
}

Category classify(const BasePacket& packet, const BackgroundRuleSet& rules) {
  for (const auto& rule : rules.rules) {
    if (rule.matches(packet)) return rule.category;
  }
  return Category::Foreground;
}

FilterResult filter_background(const TrafficLog& log, const BackgroundRuleSet& rules) {
  std::vector<TimedPacket> fg;
  std::vector<TimedPacket> bg;
  for (const auto& p : log.packets()) {
    (classify(p.base, rules) == Category::Foreground ? fg : bg).push_back(p);
  }
  return {TrafficLog(std::move(fg), log.device_addr()),
          TrafficLog(std::move(bg), log.device_addr())};
}

namespace {

std::string escape_glob(std::string_view name) {
  std::string out;
  for (char c : name) {
    if (c == '*' || c == '?' || c == '[' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

SilentProfile learn_silent_profile(const TrafficLog& silent_log) {
  SilentProfile profile;
  if (silent_log.empty()) {
    profile.warnings.push_back("EmptySilentLog: no packets, using default rules only");
  }
  // Direction is deliberately wildcarded: a keep-alive and its reply are the
  // same background conversation.
  std::set<std::tuple<std::string, std::uint16_t, Protocol>> seen;
  for (const auto& p : silent_log.packets()) {
    seen.emplace(p.base.server_name, p.base.server_port, p.base.protocol);
  }
  for (const auto& [name, port, proto] : seen) {
    const Category category = well_known_category(port, proto).value_or(Category::SignalUpdate);
    profile.rules.rules.push_back({category, escape_glob(name), port, proto, std::nullopt});
  }
  for (auto& rule : default_rules().rules) profile.rules.rules.push_back(std::move(rule));
  return profile;
}

BackgroundRuleSet parse_rules(std::string_view text) {
  BackgroundRuleSet set;
  std::size_t line_no = 0;
  for (std::string_view line : detail::lines(text)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto f = detail::split_ws(line);
    if (f.empty()) continue;
    if (f.size() != 5) {
      throw Error(ErrorCode::MalformedLine,
                  "rule needs <category> <name_glob> <port> <protocol> <direction>", line_no);
    }
    BackgroundRule rule;
    auto category = parse_category(f[0]);
    if (!category) throw Error(ErrorCode::MalformedLine, "unknown category", line_no);
    rule.category = *category;
    rule.name_glob = std::string(f[1]);
    if (f[2] != "*") {
      auto port = detail::parse_int<std::int64_t>(f[2]);
      if (!port) throw Error(ErrorCode::MalformedLine, "bad port", line_no);
      if (*port < 0 || *port > 65535) throw Error(ErrorCode::InvalidPort, "port out of range", line_no);
      rule.port = static_cast<std::uint16_t>(*port);
    }
    if (f[3] != "*") {
      rule.protocol = parse_protocol(f[3]);
      if (!rule.protocol) throw Error(ErrorCode::MalformedLine, "bad protocol", line_no);
    }
    if (f[4] != "*") {
      rule.direction = parse_direction(f[4]);
      if (!rule.direction) throw Error(ErrorCode::MalformedLine, "bad direction", line_no);
    }
    set.rules.push_back(std::move(rule));
  }
  return set;
}

std::string serialize_rules(const BackgroundRuleSet& rules) {
  std::string out;
  for (const auto& r : rules.rules) {
    out += to_string(r.category);
    out += ' ';
    out += r.name_glob;
    out += ' ';
    out += r.port ? std::to_string(*r.port) : "*";
    out += ' ';
    out += r.protocol ? format_protocol(*r.protocol) : "*";
    out += ' ';
    out += r.direction ? std::string(format_direction(*r.direction)) : "*";
    out += '\n';
  }
  return out;
}

}  // namespace athena
