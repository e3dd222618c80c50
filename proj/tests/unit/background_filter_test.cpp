#include <gtest/gtest.h>

#include "athena/background_filter.hpp"
#include "athena/errors.hpp"
#include "builders.hpp"

using namespace athena;
using athena::testing::at;
using athena::testing::base;

namespace {

BasePacket udp(std::uint16_t port, std::string server = "pool.ntp.org") {
  return base(76, Direction::DeviceToServer, "dev", std::move(server), port, Protocol::udp());
}

}  // namespace

TEST(Classify, WellKnownPorts) {
  auto rules = default_rules();
  EXPECT_EQ(classify(udp(123), rules), Category::ManagementService);
  EXPECT_EQ(classify(udp(53), rules), Category::ManagementService);
  EXPECT_EQ(classify(udp(5353), rules), Category::RandomNoise);
  EXPECT_EQ(classify(base(60, Direction::DeviceToServer, "d", "s", 22), rules),
            Category::ManagementService);
  EXPECT_EQ(classify(base(60, Direction::DeviceToServer, "d", "s", 80), rules),
            Category::SignalUpdate);
  EXPECT_EQ(classify(base(637, Direction::DeviceToServer, "lock", "rbs.august.com", 443), rules),
            Category::Foreground);
  // Port 123 over TCP is not NTP.
  EXPECT_EQ(classify(base(60, Direction::DeviceToServer, "d", "s", 123), rules),
            Category::Foreground);
}

TEST(Classify, FirstMatchWins) {
  BackgroundRuleSet rules{{{Category::RandomNoise, "*.example", std::nullopt, std::nullopt,
                            std::nullopt},
                           {Category::SignalUpdate, "*", std::nullopt, std::nullopt, std::nullopt}}};
  EXPECT_EQ(classify(base(1, Direction::DeviceToServer, "d", "a.example"), rules),
            Category::RandomNoise);
  EXPECT_EQ(classify(base(1, Direction::DeviceToServer, "d", "other"), rules),
            Category::SignalUpdate);
}

TEST(FilterBackground, AllNtpLeavesNothing) {
  TrafficLog log({at(1, udp(123)), at(2, udp(123)), at(3, udp(123))});
  auto r = filter_background(log, default_rules());
  EXPECT_TRUE(r.foreground.empty());
  EXPECT_EQ(r.background.size(), 3u);
}

TEST(FilterBackground, EmptyRuleSetIsIdentity) {
  TrafficLog log({at(1, udp(123)), at(2, base(5))});
  auto r = filter_background(log, BackgroundRuleSet{});
  EXPECT_EQ(r.foreground, log);
  EXPECT_TRUE(r.background.empty());
}

TEST(FilterBackground, MixedLogPartition) {
  TrafficLog log({at(1, udp(123)), at(2, base(637)), at(3, udp(123)), at(4, base(221)),
                  at(5, udp(123))});
  auto r = filter_background(log, default_rules());
  ASSERT_EQ(r.foreground.size(), 2u);
  EXPECT_EQ(r.foreground[0].t.count(), 2);
  EXPECT_EQ(r.foreground[1].t.count(), 4);
  EXPECT_EQ(r.foreground.size() + r.background.size(), log.size());
}

TEST(LearnSilentProfile, KeepAliveRule) {
  std::vector<TimedPacket> packets;
  for (int i = 0; i < 10; ++i) {
    packets.push_back(at(i * 30'000'000, base(90, i % 2 ? Direction::ServerToDevice
                                                        : Direction::DeviceToServer,
                                              "cam", "mqtt.example.com", 8883)));
  }
  auto profile = learn_silent_profile(TrafficLog(std::move(packets)));
  ASSERT_GE(profile.rules.rules.size(), 1u);
  const auto& rule = profile.rules.rules.front();
  EXPECT_EQ(rule.category, Category::SignalUpdate);
  EXPECT_EQ(rule.name_glob, "mqtt.example.com");
  EXPECT_EQ(rule.port, 8883);
  EXPECT_EQ(rule.protocol, Protocol::tcp());
  EXPECT_FALSE(rule.direction);
  EXPECT_EQ(profile.rules.rules.size(), 1 + default_rules().rules.size());
  EXPECT_EQ(classify(base(1, Direction::ServerToDevice, "cam", "mqtt.example.com", 8883),
                     profile.rules),
            Category::SignalUpdate);
}

TEST(LearnSilentProfile, EmptyLogGivesDefaults) {
  auto profile = learn_silent_profile(TrafficLog{});
  EXPECT_EQ(profile.rules, default_rules());
  EXPECT_FALSE(profile.warnings.empty());
}

TEST(LearnSilentProfile, FirmwareCheckOnPort80) {
  TrafficLog log({at(1, base(300, Direction::DeviceToServer, "d", "fw.vendor.com", 80))});
  auto profile = learn_silent_profile(log);
  EXPECT_EQ(profile.rules.rules.front().category, Category::SignalUpdate);
  EXPECT_EQ(profile.rules.rules.front().port, 80);
}

TEST(LearnSilentProfile, GlobCharactersEscaped) {
  TrafficLog log({at(1, base(1, Direction::DeviceToServer, "d", "odd[name]*", 9))});
  auto profile = learn_silent_profile(log);
  EXPECT_TRUE(profile.rules.rules.front().matches(
      base(1, Direction::DeviceToServer, "d", "odd[name]*", 9)));
  EXPECT_FALSE(profile.rules.rules.front().matches(
      base(1, Direction::DeviceToServer, "d", "oddn", 9)));
}

TEST(RuleFile, RoundTrip) {
  const std::string text =
      "ManagementService * 123 UDP *\n"
      "SignalUpdate *.august.com * TCP D2S\n"
      "RandomNoise * 5353 * *\n";
  auto rules = parse_rules(text);
  ASSERT_EQ(rules.rules.size(), 3u);
  EXPECT_EQ(rules.rules[1].direction, Direction::DeviceToServer);
  EXPECT_FALSE(rules.rules[1].port);
  EXPECT_EQ(serialize_rules(rules), text);
  EXPECT_EQ(parse_rules(serialize_rules(default_rules())), default_rules());
}

TEST(RuleFile, Errors) {
  EXPECT_THROW(parse_rules("Bogus * * * *\n"), Error);
  EXPECT_THROW(parse_rules("SignalUpdate * 99999 * *\n"), Error);
  EXPECT_THROW(parse_rules("SignalUpdate *\n"), Error);
  EXPECT_TRUE(parse_rules("# comment only\n\n").rules.empty());
}
