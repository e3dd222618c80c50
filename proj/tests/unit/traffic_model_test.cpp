#include <gtest/gtest.h>

#include <random>

#include "athena/errors.hpp"
#include "athena/traffic_model.hpp"
#include "builders.hpp"

using namespace athena;
using athena::testing::at;
using athena::testing::base;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::Io;
}

}  // namespace

TEST(ParseLog, EmptyTextGivesEmptyLog) {
  EXPECT_EQ(parse_log("").size(), 0u);
  EXPECT_EQ(parse_log("\n\n").size(), 0u);
}

TEST(ParseLog, SingleLine) {
  auto log = parse_log("0 lock rbs.august.com 443 TCP D2S 637\n");
  ASSERT_EQ(log.size(), 1u);
  EXPECT_EQ(log[0].t.count(), 0);
  EXPECT_EQ(log[0].base.device_addr, "lock");
  EXPECT_EQ(log[0].base.server_name, "rbs.august.com");
  EXPECT_EQ(log[0].base.server_port, 443);
  EXPECT_TRUE(log[0].base.protocol.is_tcp());
  EXPECT_EQ(log[0].base.direction, Direction::DeviceToServer);
  EXPECT_EQ(log[0].base.length, 637u);
  EXPECT_FALSE(log[0].base.payload_digest);
}

TEST(ParseLog, EqualTimestampsRejected) {
  try {
    parse_log("5 a s 1 TCP D2S 10\n5 a s 1 TCP D2S 10\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonMonotonicTimestamp);
    EXPECT_EQ(e.location(), 2u);
  }
}

TEST(ParseLog, MalformedLines) {
  EXPECT_EQ(code_of([] { parse_log("1 a s 1 TCP D2S\n"); }), ErrorCode::MalformedLine);
  EXPECT_EQ(code_of([] { parse_log("x a s 1 TCP D2S 5\n"); }), ErrorCode::MalformedLine);
  EXPECT_EQ(code_of([] { parse_log("1 a s 1 SCTP D2S 5\n"); }), ErrorCode::MalformedLine);
  EXPECT_EQ(code_of([] { parse_log("1 a s 1 TCP UP 5\n"); }), ErrorCode::MalformedLine);
  EXPECT_EQ(code_of([] { parse_log("1 a s 1 TCP D2S 5 nothex\n"); }), ErrorCode::MalformedLine);
}

TEST(ParseLog, PortOutOfRange) {
  try {
    parse_log("1 a s 1 TCP D2S 5\n2 a s 70000 TCP D2S 5\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidPort);
    EXPECT_EQ(e.location(), 2u);
  }
}

TEST(ParseLog, OtherProtocolAndDigest) {
  auto log = parse_log("7 a s 0 OTHER:47 S2D 99 00ff\n");
  EXPECT_EQ(log[0].base.protocol.number, 47);
  EXPECT_EQ(log[0].base.direction, Direction::ServerToDevice);
  EXPECT_EQ(log[0].base.payload_digest, "00ff");
  EXPECT_EQ(serialize_log(log), "7 a s 0 OTHER:47 S2D 99 00ff\n");
}

TEST(SerializeLog, RoundTripIsByteIdentical) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    auto inst = athena::testing::random_instance(rng);
    const std::string text = serialize_log(inst.log);
    EXPECT_EQ(serialize_log(parse_log(text)), text);
    EXPECT_EQ(parse_log(text), inst.log);
  }
}

TEST(Signature, InvariantsEnforced) {
  auto b = base(1);
  EXPECT_EQ(code_of([&] { Signature("a", "d", {}, {}); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { Signature("a", "d", {at(1, b)}, {}); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { Signature("a", "d", {at(0, b), at(0, b)}, {{1, 0, 1}}); }),
            ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { Signature("a", "d", {at(0, b), at(5, b)}, {}); }),
            ErrorCode::InvalidArgument);
  EXPECT_NO_THROW(Signature("a", "d", {at(0, b)}, {}));
}

TEST(Signature, FileRoundTrip) {
  auto sig = athena::testing::make_signature("manual unlocking", {base(1), base(2), base(3)},
                                             {0, 3000000, 8000000}, 3.995, "lock");
  const std::string text = serialize_signature(sig);
  EXPECT_EQ(text.substr(0, text.find('\n')), "# signature lock manual unlocking 3");
  const Signature back = parse_signature(text);
  EXPECT_EQ(back.activity_name(), "manual unlocking");
  EXPECT_EQ(serialize_signature(back), text);
}

TEST(Signature, ParseErrors) {
  EXPECT_EQ(code_of([] { parse_signature(""); }), ErrorCode::MalformedLine);
  EXPECT_EQ(code_of([] { parse_signature("# signature d a 2\n0 d s 1 TCP D2S 5\n"); }),
            ErrorCode::MalformedLine);
}

TEST(SignatureSet, RejectsDuplicatesAndEmpty) {
  auto s = athena::testing::make_signature("a", {base(1)}, {0});
  EXPECT_EQ(code_of([&] { SignatureSet({s, s}); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { SignatureSet(std::vector<Signature>{}); }), ErrorCode::InvalidArgument);
  SignatureSet set({s});
  EXPECT_NE(set.find("a"), nullptr);
  EXPECT_EQ(set.find("b"), nullptr);
}

TEST(ClusterByDevice, PartitionsByAddress) {
  TrafficLog log({at(1, base(1, Direction::DeviceToServer, "A")),
                  at(2, base(1, Direction::DeviceToServer, "B")),
                  at(3, base(1, Direction::DeviceToServer, "A"))});
  auto clusters = cluster_by_device(log);
  ASSERT_EQ(clusters.size(), 2u);
  EXPECT_EQ(clusters["A"].size(), 2u);
  EXPECT_EQ(clusters["B"].size(), 1u);
  EXPECT_EQ(clusters["A"][1].t.count(), 3);
  EXPECT_EQ(clusters["A"].device_addr(), "A");
}

TEST(ClusterByDevice, SingleDeviceAndEmpty) {
  TrafficLog log({at(1, base(1)), at(2, base(2))});
  auto clusters = cluster_by_device(log);
  ASSERT_EQ(clusters.size(), 1u);
  EXPECT_EQ(clusters.begin()->second.packets().size(), 2u);
  EXPECT_TRUE(cluster_by_device(TrafficLog{}).empty());
}

TEST(ClusterByDevice, IndexedKeepsSourcePositions) {
  TrafficLog log({at(1, base(1, Direction::DeviceToServer, "A")),
                  at(2, base(1, Direction::DeviceToServer, "B")),
                  at(3, base(1, Direction::DeviceToServer, "A"))});
  auto clusters = cluster_by_device_indexed(log);
  EXPECT_EQ(clusters["A"].source_indices, (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(clusters["B"].source_indices, (std::vector<std::size_t>{1}));
}

TEST(MergeLogs, InterleavesAndRejectsCollisions) {
  TrafficLog a({at(1, base(1)), at(5, base(1))});
  TrafficLog b({at(3, base(2))});
  std::vector<TrafficLog> logs{a, b};
  auto merged = merge_logs(logs);
  ASSERT_EQ(merged.size(), 3u);
  EXPECT_EQ(merged[1].base.length, 2u);
  std::vector<TrafficLog> clash{a, TrafficLog({at(5, base(2))})};
  EXPECT_EQ(code_of([&] { merge_logs(clash); }), ErrorCode::NonMonotonicTimestamp);
}

TEST(NormalizePacket, ResolvesCanonicalServerName) {
  NameTable names = NameTable::parse("# cloud\n34.194.10.20 rbs.august.com\n");
  RawPacketRecord raw;
  raw.src_addr = "192.168.1.50";
  raw.dst_addr = "34.194.10.20";
  raw.src_port = 49157;
  raw.dst_port = 443;
  raw.total_length = 637;
  auto b = normalize_packet(raw, Direction::DeviceToServer, names);
  EXPECT_EQ(b.server_name, "rbs.august.com");
  EXPECT_EQ(b.device_addr, "192.168.1.50");
  EXPECT_EQ(b.server_port, 443);
  EXPECT_EQ(b.length, 637u);
}

TEST(NormalizePacket, UnknownAddressKept) {
  RawPacketRecord raw;
  raw.src_addr = "52.0.0.9";
  raw.dst_addr = "192.168.1.50";
  raw.src_port = 443;
  raw.dst_port = 50000;
  auto b = normalize_packet(raw, Direction::ServerToDevice, NameTable{});
  EXPECT_EQ(b.server_name, "52.0.0.9");
  EXPECT_EQ(b.device_addr, "192.168.1.50");
  EXPECT_EQ(b.direction, Direction::ServerToDevice);
}

TEST(NormalizePacket, EphemeralPortDiscarded) {
  RawPacketRecord a;
  a.src_addr = "192.168.1.50";
  a.dst_addr = "1.2.3.4";
  a.src_port = 49156;
  a.dst_port = 443;
  a.tcp_seq = 1;
  RawPacketRecord b = a;
  b.src_port = 49157;
  b.tcp_seq = 999;
  EXPECT_EQ(normalize_packet(a, Direction::DeviceToServer, {}),
            normalize_packet(b, Direction::DeviceToServer, {}));
}

TEST(SameBase, PayloadPolicy) {
  auto a = base(1);
  auto b = base(1);
  a.payload_digest = "aa";
  b.payload_digest = "bb";
  EXPECT_TRUE(same_base(a, b, PayloadPolicy::Ignore));
  EXPECT_FALSE(same_base(a, b, PayloadPolicy::StrictWhenPresent));
  b.payload_digest.reset();
  EXPECT_TRUE(same_base(a, b, PayloadPolicy::StrictWhenPresent));
}

TEST(TrafficLog, ShiftAndSubset) {
  TrafficLog log({at(1, base(1)), at(2, base(2)), at(4, base(3))});
  auto shifted = log.shifted(Micros{10});
  EXPECT_EQ(shifted[2].t.count(), 14);
  std::vector<std::size_t> idx{0, 2};
  auto sub = log.subset(idx);
  ASSERT_EQ(sub.size(), 2u);
  EXPECT_EQ(sub[1].base.length, 3u);
}
