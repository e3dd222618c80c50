#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "athena/traffic_model.hpp"

namespace athena {

enum class Category : std::uint8_t { ManagementService, SignalUpdate, RandomNoise, Foreground };

std::string_view to_string(Category c);
std::optional<Category> parse_category(std::string_view token);

/// Header-only predicate; unset fields are wildcards. `name_glob` uses
/// fnmatch(3) syntax.
struct BackgroundRule {
  Category category = Category::SignalUpdate;
  std::string name_glob = "*";
  std::optional<std::uint16_t> port;
  std::optional<Protocol> protocol;
  std::optional<Direction> direction;

  bool matches(const BasePacket& p) const;
  friend bool operator==(const BackgroundRule&, const BackgroundRule&) = default;
};

/// Ordered rules, first match wins, no match means Foreground.
struct BackgroundRuleSet {
  std::vector<BackgroundRule> rules;
  friend bool operator==(const BackgroundRuleSet&, const BackgroundRuleSet&) = default;
};

/// Category of a well-known application port: 22/TCP, 53/UDP, 123/UDP are
/// management/service, 80/TCP signal/update, 5353/UDP random noise.
std::optional<Category> well_known_category(std::uint16_t port, Protocol protocol);

/// One rule per well-known port above.
BackgroundRuleSet default_rules();

Category classify(const BasePacket& packet, const BackgroundRuleSet& rules);

struct FilterResult {
  TrafficLog foreground;
  TrafficLog background;
};

/// Order-preserving partition of `log` into foreground and background.
FilterResult filter_background(const TrafficLog& log, const BackgroundRuleSet& rules);

struct SilentProfile {
  BackgroundRuleSet rules;
  std::vector<std::string> warnings;
};

/// Rules learned from a capture with no triggered activity: one rule per
/// distinct (server, port, protocol) seen, followed by the defaults.
SilentProfile learn_silent_profile(const TrafficLog& silent_log);

/// Rule file: `<category> <name_glob> <port|*> <TCP|UDP|OTHER:n|*> <D2S|S2D|*>`
/// per line; blank lines and `#` comments are ignored.
BackgroundRuleSet parse_rules(std::string_view text);
std::string serialize_rules(const BackgroundRuleSet& rules);

}  // namespace athena
