#include <gtest/gtest.h>

#include <cstring>

#include "athena/capture_ingest.hpp"
#include "athena/errors.hpp"
#include "athena/io.hpp"

using namespace athena;

namespace {

std::filesystem::path data(const char* name) {
  return std::filesystem::path(ATHENA_TEST_DATA_DIR) / name;
}

NameTable names() { return NameTable::parse(read_text_file(data("names.txt"))); }

const Ipv4Prefix kHome = Ipv4Prefix::parse("192.168.1.0/24");

std::vector<std::uint8_t> global_header(std::uint32_t magic = 0xa1b2c3d4, std::uint32_t link = 1) {
  std::vector<std::uint8_t> out(24, 0);
  std::memcpy(out.data(), &magic, 4);
  out[4] = 2;
  out[6] = 4;
  out[16] = 0xff;
  out[17] = 0xff;
  std::memcpy(out.data() + 20, &link, 4);
  return out;
}

}  // namespace

TEST(Ipv4Prefix, ParseAndContains) {
  auto p = Ipv4Prefix::parse("10.0.0.0/8");
  EXPECT_TRUE(p.contains("10.200.3.4"));
  EXPECT_FALSE(p.contains("11.0.0.1"));
  EXPECT_EQ(p.to_string(), "10.0.0.0/8");
  EXPECT_TRUE(Ipv4Prefix::parse("0.0.0.0/0").contains("8.8.8.8"));
  EXPECT_THROW(Ipv4Prefix::parse("10.0.0.0/33"), Error);
  EXPECT_THROW(Ipv4Prefix::parse("10.0.0/8"), Error);
  EXPECT_EQ(format_ipv4(*parse_ipv4("192.168.1.50")), "192.168.1.50");
}

TEST(ReadPcap, HeaderOnlyGivesNoRecords) {
  auto bytes = global_header();
  EXPECT_TRUE(read_pcap(bytes).empty());
}

TEST(ReadPcap, BadMagic) {
  auto bytes = global_header(0xdeadbeef);
  try {
    read_pcap(bytes);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadMagic);
    EXPECT_EQ(e.location(), 0u);
  }
}

TEST(ReadPcap, UnsupportedLinkType) {
  auto bytes = global_header(0xa1b2c3d4, 105);
  try {
    read_pcap(bytes);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnsupportedLinkType);
  }
}

TEST(ReadPcap, TruncatedRecord) {
  auto bytes = read_binary_file(data("three_packets.pcap"));
  bytes.resize(bytes.size() - 5);
  EXPECT_THROW(
      {
        try {
          read_pcap(bytes);
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), ErrorCode::TruncatedRecord);
          throw;
        }
      },
      Error);
  auto short_header = read_binary_file(data("three_packets.pcap"));
  short_header.resize(24 + 10);
  EXPECT_THROW(read_pcap(short_header), Error);
}

TEST(ReadPcap, SingleUdpNtpPacket) {
  auto records = read_pcap(read_binary_file(data("ntp_udp.pcap")));
  ASSERT_EQ(records.size(), 1u);
  const auto& r = records[0];
  EXPECT_TRUE(r.protocol.is_udp());
  EXPECT_EQ(r.dst_port, 123);
  EXPECT_EQ(r.src_port, 40000);
  EXPECT_EQ(r.src_addr, "192.168.1.50");
  EXPECT_EQ(r.dst_addr, "129.6.15.28");
  EXPECT_EQ(r.total_length, 76u);
  EXPECT_EQ(r.payload_length, 48u);
  EXPECT_EQ(r.ts.count(), 1'700'000'001'000'000);
}

TEST(ReadPcap, TcpFieldsAndDigest) {
  auto records = read_pcap(read_binary_file(data("three_packets.pcap")), {.payload_digest = true});
  ASSERT_EQ(records.size(), 3u);
  EXPECT_TRUE(records[0].protocol.is_tcp());
  EXPECT_EQ(records[0].tcp_seq, 1000u);
  EXPECT_EQ(records[0].tcp_flags, kTcpPsh | kTcpAck);
  EXPECT_EQ(records[0].payload_length, 597u);
  ASSERT_TRUE(records[0].payload_digest);
  EXPECT_EQ(records[0].payload_digest->size(), 16u);
}

TEST(Ingest, ThreePacketCaptureMatchesExpectedLog) {
  auto result = ingest(read_binary_file(data("three_packets.pcap")), kHome, names());
  EXPECT_EQ(serialize_log(result.log), read_text_file(data("three_packets.expected.log")));
  EXPECT_TRUE(result.warnings.empty());
}

TEST(Ingest, MixedCapture) {
  auto result = ingest(read_binary_file(data("mixed.pcap")), kHome, names());
  EXPECT_EQ(serialize_log(result.log), read_text_file(data("mixed.expected.log")));
  EXPECT_EQ(result.dropped_local, 1u);
  EXPECT_EQ(result.dropped_control, 3u);
  EXPECT_EQ(result.warnings.size(), 1u);
}

TEST(Ingest, RetransmissionDedup) {
  IngestOptions opts;
  opts.dedup_retransmissions = true;
  auto result = ingest(read_binary_file(data("mixed.pcap")), kHome, names(), opts);
  EXPECT_EQ(result.log.size(), 3u);
  EXPECT_EQ(result.dropped_retransmissions, 1u);
}

TEST(Ingest, KeepControlSegments) {
  IngestOptions opts;
  opts.drop_tcp_control = false;
  auto result = ingest(read_binary_file(data("mixed.pcap")), kHome, names(), opts);
  EXPECT_EQ(result.log.size(), 7u);
}

TEST(Ingest, EmptyCapture) {
  auto bytes = global_header();
  EXPECT_TRUE(ingest(bytes, kHome, {}).log.empty());
}

TEST(Ingest, OutOfOrderRecordsAreSorted) {
  auto bytes = read_binary_file(data("three_packets.pcap"));
  // Swap the first two records' timestamps in place.
  const std::size_t first = 24;
  std::uint32_t len0 = 0;
  std::memcpy(&len0, bytes.data() + first + 8, 4);
  const std::size_t second = first + 16 + len0;
  std::uint32_t usec0 = 0, usec1 = 0;
  std::memcpy(&usec0, bytes.data() + first + 4, 4);
  std::memcpy(&usec1, bytes.data() + second + 4, 4);
  std::memcpy(bytes.data() + first + 4, &usec1, 4);
  std::memcpy(bytes.data() + second + 4, &usec0, 4);
  auto log = ingest(bytes, kHome, names()).log;
  ASSERT_EQ(log.size(), 3u);
  EXPECT_EQ(log[0].base.direction, Direction::ServerToDevice);
  EXPECT_LT(log[0].t, log[1].t);
}

TEST(InferDirection, LanWanClassification) {
  RawPacketRecord r;
  r.src_addr = "192.168.1.50";
  r.dst_addr = "8.8.8.8";
  EXPECT_EQ(infer_direction(r, kHome), Direction::DeviceToServer);
  std::swap(r.src_addr, r.dst_addr);
  EXPECT_EQ(infer_direction(r, kHome), Direction::ServerToDevice);
  r.src_addr = "192.168.1.1";
  EXPECT_EQ(infer_direction(r, kHome), std::nullopt);
  r.src_addr = "1.1.1.1";
  r.dst_addr = "2.2.2.2";
  EXPECT_EQ(infer_direction(r, kHome), std::nullopt);
}
