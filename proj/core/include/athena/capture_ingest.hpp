#pragma once

// Legacy pcap (not pcapng) reader: Ethernet -> IPv4 -> TCP/UDP headers.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "athena/traffic_model.hpp"

namespace athena {

/// IPv4 CIDR prefix such as 192.168.1.0/24.
class Ipv4Prefix {
 public:
  Ipv4Prefix() = default;
  Ipv4Prefix(std::uint32_t network, unsigned length);

  /// Throws InvalidArgument on malformed input.
  static Ipv4Prefix parse(std::string_view cidr);

  bool contains(std::uint32_t address) const;
  bool contains(std::string_view dotted) const;
  std::string to_string() const;

 private:
  std::uint32_t network_ = 0;
  std::uint32_t mask_ = 0;
  unsigned length_ = 0;
};

std::optional<std::uint32_t> parse_ipv4(std::string_view dotted);
std::string format_ipv4(std::uint32_t address);

inline constexpr std::uint8_t kTcpFin = 0x01;
inline constexpr std::uint8_t kTcpSyn = 0x02;
inline constexpr std::uint8_t kTcpRst = 0x04;
inline constexpr std::uint8_t kTcpPsh = 0x08;
inline constexpr std::uint8_t kTcpAck = 0x10;

struct PcapOptions {
  /// Attach an FNV-1a 64-bit digest of the captured payload bytes.
  bool payload_digest = false;
};

/// Decodes IPv4 packets in file order. Non-IPv4 frames and frames whose
/// captured bytes do not cover the IP/transport headers are skipped.
/// Errors: BadMagic, TruncatedRecord(offset), UnsupportedLinkType(code).
std::vector<RawPacketRecord> read_pcap(std::span<const std::uint8_t> bytes,
                                       const PcapOptions& options = {});

/// Direction relative to the home network: src inside => DeviceToServer,
/// dst inside => ServerToDevice. LAN-internal and transit packets have no
/// direction.
std::optional<Direction> infer_direction(const RawPacketRecord& raw,
                                         const Ipv4Prefix& home_prefix);

struct IngestOptions {
  /// Drop zero-payload TCP segments (handshake, pure ACK, FIN/RST).
  bool drop_tcp_control = true;
  /// Drop TCP data segments repeating an already seen (flow, seq, length).
  bool dedup_retransmissions = false;
  bool payload_digest = false;
};

struct IngestResult {
  TrafficLog log;
  std::vector<std::string> warnings;
  std::size_t dropped_local = 0;
  std::size_t dropped_control = 0;
  std::size_t dropped_retransmissions = 0;
};

/// read_pcap + normalize_packet, sorted by timestamp. Equal timestamps are
/// made strictly increasing by +1us steps in file order; each bump is
/// reported in `warnings`.
IngestResult ingest(std::span<const std::uint8_t> bytes, const Ipv4Prefix& home_prefix,
                    const NameTable& names, const IngestOptions& options = {});

}  // namespace athena
