#pragma once

// Packet, log and signature data model plus the canonical text formats.
//
// Canonical log line (one packet per line, whitespace separated):
//   <t_us> <device_addr> <server_name> <server_port> <TCP|UDP|OTHER:n>
//   <D2S|S2D> <length> [<payload_digest_hex>]
//
// Signature file:
//   # signature <device_label> <activity_name> <n>
//   n canonical lines with relative timestamps (first is 0)
//   n-1 lines: interval <j> <mean_us> <stdev_us> <count>   (j is 1-based)

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace athena {

using Micros = std::chrono::microseconds;

inline double to_seconds(Micros t) { return static_cast<double>(t.count()) * 1e-6; }

/// IP protocol number. TCP and UDP are named; anything else is OTHER:<n>.
struct Protocol {
  std::uint8_t number = 6;

  static constexpr Protocol tcp() { return {6}; }
  static constexpr Protocol udp() { return {17}; }
  constexpr bool is_tcp() const { return number == 6; }
  constexpr bool is_udp() const { return number == 17; }

  friend constexpr auto operator<=>(Protocol, Protocol) = default;
};

enum class Direction : std::uint8_t { DeviceToServer, ServerToDevice };

std::string format_protocol(Protocol p);
std::optional<Protocol> parse_protocol(std::string_view token);
std::string_view format_direction(Direction d);
std::optional<Direction> parse_direction(std::string_view token);

enum class PayloadPolicy {
  Ignore,             // match on endpoints, direction and length only
  StrictWhenPresent,  // digests must agree when both sides carry one
};

/// A packet with its timestamp removed.
struct BasePacket {
  std::string device_addr;
  std::string server_name;
  std::uint16_t server_port = 0;
  Protocol protocol = Protocol::tcp();
  Direction direction = Direction::DeviceToServer;
  std::uint32_t length = 0;
  std::optional<std::string> payload_digest;

  /// Exact field-wise equality including the digest. Matching code uses
  /// `same_base`, which applies the payload policy.
  friend bool operator==(const BasePacket&, const BasePacket&) = default;
  friend auto operator<=>(const BasePacket&, const BasePacket&) = default;
};

bool same_base(const BasePacket& a, const BasePacket& b,
               PayloadPolicy policy = PayloadPolicy::Ignore);

struct TimedPacket {
  BasePacket base;
  Micros t{0};

  double seconds() const { return to_seconds(t); }
  friend bool operator==(const TimedPacket&, const TimedPacket&) = default;
};

/// Ordered packets with strictly increasing timestamps.
class TrafficLog {
 public:
  TrafficLog() = default;

  /// Throws NonMonotonicTimestamp (location = 1-based packet position) when
  /// timestamps do not strictly increase, InvalidArgument when
  /// `device_addr` is set and a packet belongs to another device.
  explicit TrafficLog(std::vector<TimedPacket> packets,
                      std::optional<std::string> device_addr = std::nullopt);

  std::span<const TimedPacket> packets() const { return packets_; }
  const TimedPacket& operator[](std::size_t i) const { return packets_[i]; }
  std::size_t size() const { return packets_.size(); }
  bool empty() const { return packets_.empty(); }
  const std::optional<std::string>& device_addr() const { return device_addr_; }

  /// Packets at the given (increasing) positions, device tag preserved.
  TrafficLog subset(std::span<const std::size_t> indices) const;

  /// The same packets with every timestamp moved by `offset`.
  TrafficLog shifted(Micros offset) const;

  friend bool operator==(const TrafficLog&, const TrafficLog&) = default;

 private:
  std::vector<TimedPacket> packets_;
  std::optional<std::string> device_addr_;
};

struct IntervalStat {
  double mean_us = 0.0;
  double stdev_us = 0.0;
  std::uint32_t sample_count = 1;

  double mean_seconds() const { return mean_us * 1e-6; }
  double stdev_seconds() const { return stdev_us * 1e-6; }
  friend bool operator==(const IntervalStat&, const IntervalStat&) = default;
};

/// Activity signature in the relative-timestamp representation: packets[0]
/// sits at t = 0 and gap j is packets[j+1].t - packets[j].t.
class Signature {
 public:
  Signature() = default;

  /// Throws InvalidArgument unless n >= 1, packets[0].t == 0, timestamps
  /// strictly increase, and there is one interval stat per gap.
  Signature(std::string activity_name, std::string device_label,
            std::vector<TimedPacket> packets,
            std::vector<IntervalStat> interval_stats);

  const std::string& activity_name() const { return activity_name_; }
  const std::string& device_label() const { return device_label_; }
  std::span<const TimedPacket> packets() const { return packets_; }
  std::span<const IntervalStat> interval_stats() const { return interval_stats_; }
  std::size_t size() const { return packets_.size(); }
  std::size_t gap_count() const { return packets_.size() - 1; }

  /// Gap between packet j and j+1 (0-based j).
  Micros gap(std::size_t j) const { return packets_[j + 1].t - packets_[j].t; }
  Micros duration() const { return packets_.back().t; }

  friend bool operator==(const Signature&, const Signature&) = default;

 private:
  std::string activity_name_;
  std::string device_label_;
  std::vector<TimedPacket> packets_;
  std::vector<IntervalStat> interval_stats_;
};

/// Non-empty set of signatures with unique activity names, kept in
/// insertion order.
class SignatureSet {
 public:
  SignatureSet() = default;
  explicit SignatureSet(std::vector<Signature> signatures);

  std::span<const Signature> signatures() const { return signatures_; }
  std::size_t size() const { return signatures_.size(); }
  const Signature& operator[](std::size_t k) const { return signatures_[k]; }
  const Signature* find(std::string_view activity_name) const;
  std::size_t max_length() const;

 private:
  std::vector<Signature> signatures_;
};

// Canonical text formats.

std::string format_packet_line(const TimedPacket& packet);
TimedPacket parse_packet_line(std::string_view line, std::size_t line_no);

/// Errors: MalformedLine, NonMonotonicTimestamp, InvalidPort (location is
/// the 1-based line number). Blank lines are skipped.
TrafficLog parse_log(std::string_view text);
std::string serialize_log(const TrafficLog& log);

Signature parse_signature(std::string_view text);
std::string serialize_signature(const Signature& signature);

/// Static address -> canonical server name table. Text form: one
/// `<address> <name>` pair per line, `#` starts a comment.
class NameTable {
 public:
  NameTable() = default;
  static NameTable parse(std::string_view text);

  void add(std::string address, std::string name);
  /// Canonical name for `address`, or the address itself when unknown.
  std::string resolve(std::string_view address) const;
  std::size_t size() const { return names_.size(); }

 private:
  std::map<std::string, std::string, std::less<>> names_;
};

/// One decoded capture record before normalization.
struct RawPacketRecord {
  Micros ts{0};
  std::string src_addr;
  std::string dst_addr;
  std::optional<std::uint16_t> src_port;  // TCP/UDP only
  std::optional<std::uint16_t> dst_port;
  Protocol protocol = Protocol::tcp();
  std::uint32_t total_length = 0;         // IPv4 total length
  std::uint32_t payload_length = 0;       // application bytes
  std::uint8_t tcp_flags = 0;
  std::uint32_t tcp_seq = 0;
  std::optional<std::string> payload_digest;
};

/// Projects a raw record to its base packet. The device endpoint is chosen
/// by `direction`; its (ephemeral) port, sequence numbers and TTL are
/// dropped and both addresses are replaced by their canonical names.
BasePacket normalize_packet(const RawPacketRecord& raw, Direction direction,
                            const NameTable& names);

/// Applies the name table to an existing base packet.
BasePacket canonicalize(BasePacket packet, const NameTable& names);

/// Splits a log by device address, preserving order and timestamps.
std::map<std::string, TrafficLog> cluster_by_device(const TrafficLog& log);

struct DeviceCluster {
  TrafficLog log;
  std::vector<std::size_t> source_indices;  // positions in the input log
};
std::map<std::string, DeviceCluster> cluster_by_device_indexed(const TrafficLog& log);

/// Merges logs by timestamp. Throws NonMonotonicTimestamp on collisions.
TrafficLog merge_logs(std::span<const TrafficLog> logs);

}  // namespace athena
