#include <gtest/gtest.h>

#include <random>

#include "athena/act_extract.hpp"
#include "athena/errors.hpp"
#include "athena/eval_harness.hpp"
#include "athena/io.hpp"
#include "builders.hpp"

using namespace athena;
using athena::testing::at;
using athena::testing::base;
using athena::testing::make_signature;

namespace {

const BasePacket X = base(100);
const BasePacket Y = base(200, Direction::ServerToDevice);
const BasePacket Z = base(300);

SignatureSet two_sigs() {
  return SignatureSet({make_signature("A", {X, Y}, {0, 1000}, 10.0),
                       make_signature("B", {Z, Y, X}, {0, 500, 1500}, 10.0)});
}

std::vector<std::string> names(const ExtractionResult& r) {
  std::vector<std::string> out;
  for (auto& e : r.events) out.push_back(e.activity_name);
  return out;
}

SignatureSet august_lock() { return load_signatures(ATHENA_SIGNATURE_DIR); }

}  // namespace

TEST(CompareOrder, Rules) {
  EXPECT_TRUE(compare_order(Match{{1, 3}}, Match{{2, 4}}) < 0);
  EXPECT_TRUE(compare_order(Match{{1, 5}}, Match{{1, 3}}) > 0);
  EXPECT_TRUE(compare_order(Match{{1, 3}}, "a", Match{{1, 3}}, "b") < 0);
  EXPECT_TRUE(compare_order(Match{{1, 3}}, "a", Match{{1, 3}}, "a") == 0);
}

TEST(ActExtract, SequentialPair) {
  auto sigs = two_sigs();
  TrafficLog log({at(10'000, X), at(11'000, Y), at(50'000, Z), at(50'500, Y), at(51'500, X)});
  auto r = act_extract(log, sigs, tolerance_set(sigs, 3));
  EXPECT_EQ(names(r), (std::vector<std::string>{"A", "B"}));
  EXPECT_EQ(r.events[0].match.indices, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(r.events[1].match.indices, (std::vector<std::size_t>{2, 3, 4}));
  EXPECT_EQ(r.events[1].end_t.count(), 51'500);
  EXPECT_EQ(r.events[0].device, "dev");
  EXPECT_TRUE(r.residual.empty());
  EXPECT_TRUE(r.anomalies.empty());
}

TEST(ActExtract, EmptyLog) {
  auto sigs = two_sigs();
  auto r = act_extract(TrafficLog{}, sigs, tolerance_set(sigs, 3));
  EXPECT_TRUE(r.events.empty());
}

TEST(ActExtract, MissingToleranceRejected) {
  auto sigs = two_sigs();
  ToleranceSet partial;
  partial.emplace("A", tolerance_vector(sigs[0], 3));
  EXPECT_THROW(act_extract(TrafficLog{}, sigs, partial), Error);
}

TEST(ActExtract, TrailingNoiseLeftInResidual) {
  auto sigs = two_sigs();
  TrafficLog log({at(10'000, X), at(11'000, Y), at(90'000, Z)});
  auto r = act_extract(log, sigs, tolerance_set(sigs, 3));
  EXPECT_EQ(names(r), (std::vector<std::string>{"A"}));
  ASSERT_EQ(r.residual.size(), 1u);
  EXPECT_EQ(r.residual[0].t.count(), 90'000);
}

TEST(ActExtract, IdenticalClaimsReportAnomaly) {
  // Two signatures with identical packets and timing.
  SignatureSet sigs({make_signature("b", {X, Y}, {0, 1000}), make_signature("a", {X, Y}, {0, 1000})});
  TrafficLog log({at(0, X), at(1000, Y)});
  auto r = act_extract(log, sigs, tolerance_set(sigs, 1));
  EXPECT_EQ(names(r), (std::vector<std::string>{"a"}));
  ASSERT_EQ(r.anomalies.size(), 2u);
  EXPECT_EQ(r.anomalies[0].packet_index, 0u);
  EXPECT_EQ(r.anomalies[0].signatures, (std::vector<std::string>{"a", "b"}));
}

TEST(ActExtract, EarlierCompletionWins) {
  // Bluetooth-style short signature embedded in a longer one: both start at
  // the same packet, the shorter one completes first.
  SignatureSet sigs({make_signature("long", {X, Y, X, Y}, {0, 10, 500, 510}),
                     make_signature("short", {X, Y}, {0, 10})});
  TrafficLog log({at(0, X), at(10, Y), at(500, X), at(510, Y)});
  auto r = act_extract(log, sigs, tolerance_set(sigs, 1));
  EXPECT_EQ(names(r), (std::vector<std::string>{"short", "short"}));
}

TEST(ActExtract, ConcurrentModeRecoversInterleaving) {
  auto sigs = two_sigs();
  // A starts, B starts and completes, A completes.
  TrafficLog log({at(0, X), at(100, Z), at(600, Y), at(1000, Y), at(1600, X)});
  auto seq = act_extract(log, sigs, tolerance_set(sigs, 3));
  ExtractOptions opts;
  opts.concurrent = true;
  auto conc = act_extract(log, sigs, tolerance_set(sigs, 3), opts);
  EXPECT_EQ(names(conc), (std::vector<std::string>{"A", "B"}));
  EXPECT_EQ(conc.events[0].match.indices, (std::vector<std::size_t>{0, 3}));
  EXPECT_EQ(conc.events[1].match.indices, (std::vector<std::size_t>{1, 2, 4}));
  EXPECT_TRUE(conc.residual.empty());
  EXPECT_NE(names(seq), names(conc));
}

TEST(ActExtract, EventsRespectRemovalOrder) {
  auto sigs = august_lock();
  std::mt19937_64 rng(1);
  std::vector<std::string> acts;
  for (int i = 0; i < 20; ++i) {
    acts.push_back(std::string(sigs[rng() % sigs.size()].activity_name()));
  }
  auto schedule = make_schedule(sigs, acts, 5);
  auto truth = synthesize(sigs, schedule, {}, 6);
  auto r = act_extract(truth.log, sigs, tolerance_set(sigs, 11));
  for (std::size_t k = 1; k < r.events.size(); ++k) {
    EXPECT_GT(r.events[k].match.first(), r.events[k - 1].match.last());
    EXPECT_GT(r.events[k].end_t, r.events[k - 1].end_t);
  }
}

TEST(ActExtract, TwentyActivitiesAtTwoSigmaRecovered) {
  auto sigs = august_lock();
  // Gap noise drawn at twice each interval's stdev.
  std::vector<Signature> widened;
  for (auto& s : sigs.signatures()) {
    std::vector<IntervalStat> stats(s.interval_stats().begin(), s.interval_stats().end());
    for (auto& st : stats) st.stdev_us *= 2;
    widened.emplace_back(s.activity_name(), s.device_label(),
                         std::vector<TimedPacket>(s.packets().begin(), s.packets().end()), stats);
  }
  SignatureSet noisy(std::move(widened));
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::string> acts;
    for (int i = 0; i < 20; ++i) acts.push_back(sigs[rng() % sigs.size()].activity_name());
    auto truth = synthesize(noisy, make_schedule(noisy, acts, rng()), {}, rng());
    auto r = act_extract(truth.log, sigs, tolerance_set(sigs, 11));
    EXPECT_EQ(names(r), acts);
  }
}

TEST(ActExtract, ReplayReproducesMatchedBases) {
  auto sigs = august_lock();
  std::vector<std::string> acts{"wifi_unlocking", "autolocking", "app_opening"};
  auto truth = synthesize(sigs, make_schedule(sigs, acts, 3), {.chatter_per_minute = 20}, 4);
  auto fg = filter_background(truth.log, default_rules()).foreground;
  auto r = act_extract(fg, sigs, tolerance_set(sigs, 11));
  ASSERT_EQ(r.events.size(), 3u);
  for (auto& e : r.events) {
    const Signature* sig = sigs.find(e.activity_name);
    ASSERT_EQ(e.match.indices.size(), sig->size());
    for (std::size_t j = 0; j < sig->size(); ++j) {
      EXPECT_EQ(fg[e.match.indices[j]].base, sig->packets()[j].base);
    }
  }
}

TEST(ActExtract, Deterministic) {
  auto sigs = august_lock();
  std::vector<std::string> acts{"wifi_unlocking", "bluetooth_unlocking", "manual_unlocking"};
  auto truth = synthesize(sigs, make_schedule(sigs, acts, 9),
                          {.confusers_per_activity = 2.0}, 10);
  auto tol = tolerance_set(sigs, 20);
  auto a = act_extract(truth.log, sigs, tol);
  ExtractOptions opts;
  opts.jobs = 4;
  auto b = act_extract(truth.log, sigs, tol, opts);
  EXPECT_EQ(a.events, b.events);
  EXPECT_EQ(a.anomalies, b.anomalies);
  EXPECT_EQ(a.residual, b.residual);
}

TEST(ExtractAllDevices, TwoDevicesAndUnknown) {
  auto sig_a = make_signature("on", {base(10, Direction::DeviceToServer, "plug")}, {0});
  auto sig_b = make_signature("open", {base(20, Direction::DeviceToServer, "lock")}, {0});
  std::map<std::string, DeviceProfile> profiles;
  SignatureSet set_a({sig_a}), set_b({sig_b});
  profiles.emplace("plug", DeviceProfile{set_a, tolerance_set(set_a, 1)});
  profiles.emplace("lock", DeviceProfile{set_b, tolerance_set(set_b, 1)});
  TrafficLog mixed({at(1, base(20, Direction::DeviceToServer, "lock")),
                    at(2, base(99, Direction::DeviceToServer, "cam")),
                    at(3, base(10, Direction::DeviceToServer, "plug"))});
  ExtractOptions opts;
  opts.jobs = 2;
  auto r = extract_all_devices(mixed, profiles, opts);
  ASSERT_EQ(r.devices.size(), 2u);
  EXPECT_EQ(r.devices["lock"].events.at(0).match.indices, (std::vector<std::size_t>{0}));
  EXPECT_EQ(r.devices["plug"].events.at(0).match.indices, (std::vector<std::size_t>{2}));
  EXPECT_EQ(r.unknown_devices, (std::vector<std::string>{"cam"}));
}

TEST(ExtractAllDevices, FiveDeviceDayMatchesGroundTruth) {
  auto lock = august_lock();
  std::map<std::string, DeviceProfile> profiles;
  std::vector<TrafficLog> logs;
  std::map<std::string, std::vector<std::string>> expected;
  std::mt19937_64 rng(77);
  for (int d = 0; d < 5; ++d) {
    const std::string device = "dev" + std::to_string(d);
    std::vector<Signature> sigs;
    for (auto& s : lock.signatures()) {
      std::vector<TimedPacket> packets(s.packets().begin(), s.packets().end());
      for (auto& p : packets) {
        p.base.device_addr = device;
        p.base.server_name = "cloud" + std::to_string(d) + ".example";
      }
      sigs.emplace_back(s.activity_name(), device, std::move(packets),
                        std::vector<IntervalStat>(s.interval_stats().begin(), s.interval_stats().end()));
    }
    SignatureSet set(std::move(sigs));
    std::vector<std::string> acts;
    for (int i = 0; i < 40; ++i) acts.push_back(set[rng() % set.size()].activity_name());
    // About 40 activities spread over a day, offset per device.
    auto schedule = make_schedule(set, acts, rng(), Micros{1'000'000 + d * 7'777},
                                  Micros{60'000'000}, Micros{2'000'000'000});
    auto truth = synthesize(set, schedule, {}, rng());
    logs.push_back(truth.log);
    expected[device] = acts;
    profiles.emplace(device, DeviceProfile{set, tolerance_set(set, 11)});
  }
  auto mixed = merge_logs(logs);
  auto r = extract_all_devices(mixed, profiles);
  ASSERT_EQ(r.devices.size(), 5u);
  for (auto& [device, result] : r.devices) EXPECT_EQ(names(result), expected[device]);
  EXPECT_TRUE(r.unknown_devices.empty());
}
