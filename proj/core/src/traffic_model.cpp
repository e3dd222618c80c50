#include "athena/traffic_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <utility>

#include "athena/errors.hpp"
#include "text_util.hpp"

namespace athena {

std::string format_protocol(Protocol p) {
  if (p.is_tcp()) return "TCP";
  if (p.is_udp()) return "UDP";
  return "OTHER:" + std::to_string(p.number);
}

std::optional<Protocol> parse_protocol(std::string_view token) {
  if (token == "TCP") return Protocol::tcp();
  if (token == "UDP") return Protocol::udp();
  constexpr std::string_view kOther = "OTHER:";
  if (token.starts_with(kOther)) {
    auto value = detail::parse_int<unsigned>(token.substr(kOther.size()));
    // TCP and UDP have their own spelling; OTHER:6 would not round-trip.
    if (!value || *value > 255 || *value == 6 || *value == 17) return std::nullopt;
    return Protocol{static_cast<std::uint8_t>(*value)};
  }
  return std::nullopt;
}

std::string_view format_direction(Direction d) {
  return d == Direction::DeviceToServer ? "D2S" : "S2D";
}

std::optional<Direction> parse_direction(std::string_view token) {
  if (token == "D2S") return Direction::DeviceToServer;
  if (token == "S2D") return Direction::ServerToDevice;
  return std::nullopt;
}

bool same_base(const BasePacket& a, const BasePacket& b, PayloadPolicy policy) {
  if (a.length != b.length || a.server_port != b.server_port ||
      a.direction != b.direction || a.protocol != b.protocol ||
      a.server_name != b.server_name || a.device_addr != b.device_addr) {
    return false;
  }
  if (policy == PayloadPolicy::StrictWhenPresent && a.payload_digest &&
      b.payload_digest) {
    return *a.payload_digest == *b.payload_digest;
  }
  return true;
}

// ---------------------------------------------------------------------------
// TrafficLog

TrafficLog::TrafficLog(std::vector<TimedPacket> packets,
                       std::optional<std::string> device_addr)
    : packets_(std::move(packets)), device_addr_(std::move(device_addr)) {
  for (std::size_t i = 1; i < packets_.size(); ++i) {
    if (packets_[i].t <= packets_[i - 1].t) {
      throw Error(ErrorCode::NonMonotonicTimestamp,
                  "timestamp " + std::to_string(packets_[i].t.count()) +
                      "us does not exceed its predecessor",
                  i + 1);
    }
  }
  if (device_addr_) {
    for (const auto& p : packets_) {
      if (p.base.device_addr != *device_addr_) {
        throw Error(ErrorCode::InvalidArgument,
                    "packet of device " + p.base.device_addr +
                        " in log tagged " + *device_addr_);
      }
    }
  }
}

TrafficLog TrafficLog::subset(std::span<const std::size_t> indices) const {
  std::vector<TimedPacket> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(packets_.at(i));
  return TrafficLog(std::move(out), device_addr_);
}

TrafficLog TrafficLog::shifted(Micros offset) const {
  std::vector<TimedPacket> out(packets_);
  for (auto& p : out) p.t += offset;
  return TrafficLog(std::move(out), device_addr_);
}

// ---------------------------------------------------------------------------
// Signature

Signature::Signature(std::string activity_name, std::string device_label,
                     std::vector<TimedPacket> packets,
                     std::vector<IntervalStat> interval_stats)
    : activity_name_(std::move(activity_name)),
      device_label_(std::move(device_label)),
      packets_(std::move(packets)),
      interval_stats_(std::move(interval_stats)) {
  if (packets_.empty()) {
    throw Error(ErrorCode::InvalidArgument, "signature has no packets");
  }
  if (packets_.front().t != Micros{0}) {
    throw Error(ErrorCode::InvalidArgument,
                "first relative timestamp of a signature must be 0");
  }
  if (interval_stats_.size() != packets_.size() - 1) {
    throw Error(ErrorCode::InvalidArgument,
                "signature needs one interval stat per gap");
  }
  for (std::size_t j = 0; j + 1 < packets_.size(); ++j) {
    const Micros tau = gap(j);
    if (tau <= Micros{0}) {
      throw Error(ErrorCode::InvalidArgument,
                  "signature timestamps must strictly increase");
    }
    const auto& stat = interval_stats_[j];
    if (!(stat.mean_us > 0.0) || !(stat.stdev_us >= 0.0) || stat.sample_count < 1) {
      throw Error(ErrorCode::InvalidArgument, "invalid interval stat for gap " +
                                                  std::to_string(j + 1));
    }
    // tau is the mean rounded to whole microseconds (at least 1us).
    if (std::abs(stat.mean_us - static_cast<double>(tau.count())) > 1.0) {
      throw Error(ErrorCode::InvalidArgument,
                  "interval mean disagrees with relative timestamps at gap " +
                      std::to_string(j + 1));
    }
  }
  if (activity_name_.empty() || device_label_.empty()) {
    throw Error(ErrorCode::InvalidArgument, "signature needs a name and a device label");
  }
}

SignatureSet::SignatureSet(std::vector<Signature> signatures)
    : signatures_(std::move(signatures)) {
  if (signatures_.empty()) {
    throw Error(ErrorCode::InvalidArgument, "signature set is empty");
  }
  std::set<std::string_view> names;
  for (const auto& s : signatures_) {
    if (!names.insert(s.activity_name()).second) {
      throw Error(ErrorCode::InvalidArgument,
                  "duplicate activity name: " + s.activity_name());
    }
  }
}

const Signature* SignatureSet::find(std::string_view activity_name) const {
  for (const auto& s : signatures_) {
    if (s.activity_name() == activity_name) return &s;
  }
  return nullptr;
}

std::size_t SignatureSet::max_length() const {
  std::size_t n = 0;
  for (const auto& s : signatures_) n = std::max(n, s.size());
  return n;
}

// ---------------------------------------------------------------------------
// Text formats

std::string format_packet_line(const TimedPacket& p) {
  std::string line = std::to_string(p.t.count());
  line += ' ';
  line += p.base.device_addr;
  line += ' ';
  line += p.base.server_name;
  line += ' ';
  line += std::to_string(p.base.server_port);
  line += ' ';
  line += format_protocol(p.base.protocol);
  line += ' ';
  line += format_direction(p.base.direction);
  line += ' ';
  line += std::to_string(p.base.length);
  if (p.base.payload_digest) {
    line += ' ';
    line += *p.base.payload_digest;
  }
  return line;
}

TimedPacket parse_packet_line(std::string_view line, std::size_t line_no) {
  const auto tokens = detail::split_ws(line);
  if (tokens.size() != 7 && tokens.size() != 8) {
    throw Error(ErrorCode::MalformedLine,
                "expected 7 or 8 fields, got " + std::to_string(tokens.size()), line_no);
  }
  auto fail = [&](const std::string& what) -> Error {
    return Error(ErrorCode::MalformedLine, what, line_no);
  };

  TimedPacket p;
  auto t = detail::parse_int<std::int64_t>(tokens[0]);
  if (!t) throw fail("bad timestamp '" + std::string(tokens[0]) + "'");
  p.t = Micros{*t};
  p.base.device_addr = std::string(tokens[1]);
  p.base.server_name = std::string(tokens[2]);

  auto port = detail::parse_int<std::int64_t>(tokens[3]);
  if (!port) throw fail("bad port '" + std::string(tokens[3]) + "'");
  if (*port < 0 || *port > 65535) {
    throw Error(ErrorCode::InvalidPort, "port " + std::to_string(*port) + " out of range",
                line_no);
  }
  p.base.server_port = static_cast<std::uint16_t>(*port);

  auto proto = parse_protocol(tokens[4]);
  if (!proto) throw fail("bad protocol '" + std::string(tokens[4]) + "'");
  p.base.protocol = *proto;

  auto dir = parse_direction(tokens[5]);
  if (!dir) throw fail("bad direction '" + std::string(tokens[5]) + "'");
  p.base.direction = *dir;

  auto length = detail::parse_int<std::uint32_t>(tokens[6]);
  if (!length) throw fail("bad length '" + std::string(tokens[6]) + "'");
  p.base.length = *length;

  if (tokens.size() == 8) {
    if (!detail::is_hex(tokens[7])) throw fail("payload digest is not hex");
    p.base.payload_digest = std::string(tokens[7]);
  }
  return p;
}

TrafficLog parse_log(std::string_view text) {
  std::vector<TimedPacket> packets;
  std::size_t line_no = 0;
  for (std::string_view line : detail::lines(text)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    TimedPacket p = parse_packet_line(line, line_no);
    if (!packets.empty() && p.t <= packets.back().t) {
      throw Error(ErrorCode::NonMonotonicTimestamp,
                  "timestamp does not exceed the previous line", line_no);
    }
    packets.push_back(std::move(p));
  }
  return TrafficLog(std::move(packets));
}

std::string serialize_log(const TrafficLog& log) {
  std::string out;
  for (const auto& p : log.packets()) {
    out += format_packet_line(p);
    out += '\n';
  }
  return out;
}

namespace {

std::string format_fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

std::string serialize_signature(const Signature& s) {
  std::string out = "# signature " + s.device_label() + " " + s.activity_name() + " " +
                    std::to_string(s.size()) + "\n";
  for (const auto& p : s.packets()) {
    out += format_packet_line(p);
    out += '\n';
  }
  const auto stats = s.interval_stats();
  for (std::size_t j = 0; j < stats.size(); ++j) {
    out += "interval " + std::to_string(j + 1) + " " + format_fixed3(stats[j].mean_us) +
           " " + format_fixed3(stats[j].stdev_us) + " " +
           std::to_string(stats[j].sample_count) + "\n";
  }
  return out;
}

Signature parse_signature(std::string_view text) {
  std::vector<std::pair<std::size_t, std::string_view>> body;
  std::size_t line_no = 0;
  for (std::string_view line : detail::lines(text)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    body.emplace_back(line_no, line);
  }
  if (body.empty()) throw Error(ErrorCode::MalformedLine, "empty signature file", 1);

  // Header: "# signature <device> <activity name, may contain spaces> <n>"
  const auto [header_no, header] = body.front();
  const auto tokens = detail::split_ws(header);
  if (tokens.size() < 5 || tokens[0] != "#" || tokens[1] != "signature") {
    throw Error(ErrorCode::MalformedLine, "missing '# signature' header", header_no);
  }
  auto n = detail::parse_int<std::size_t>(tokens.back());
  if (!n || *n == 0) throw Error(ErrorCode::MalformedLine, "bad packet count", header_no);
  std::string device(tokens[2]);
  const char* name_begin = tokens[3].data();
  const char* name_end = tokens[tokens.size() - 2].data() + tokens[tokens.size() - 2].size();
  std::string activity(name_begin, name_end);

  const std::size_t expected = 1 + *n + (*n - 1);
  if (body.size() != expected) {
    const std::size_t at = body.size() < expected ? body.back().first : body[expected].first;
    throw Error(ErrorCode::MalformedLine,
                "expected " + std::to_string(expected) + " non-empty lines, found " +
                    std::to_string(body.size()),
                at);
  }

  std::vector<TimedPacket> packets;
  for (std::size_t k = 1; k <= *n; ++k) {
    packets.push_back(parse_packet_line(body[k].second, body[k].first));
    if (packets.size() > 1 && packets.back().t <= packets[packets.size() - 2].t) {
      throw Error(ErrorCode::NonMonotonicTimestamp,
                  "relative timestamps must strictly increase", body[k].first);
    }
  }
  if (packets.front().t != Micros{0}) {
    throw Error(ErrorCode::MalformedLine, "first relative timestamp must be 0",
                body[1].first);
  }

  std::vector<IntervalStat> stats;
  for (std::size_t k = 1 + *n; k < body.size(); ++k) {
    const auto [no, line] = body[k];
    const auto f = detail::split_ws(line);
    const std::size_t j = stats.size() + 1;
    auto index = f.size() == 5 ? detail::parse_int<std::size_t>(f[1]) : std::nullopt;
    auto mean = f.size() == 5 ? detail::parse_double(f[2]) : std::nullopt;
    auto stdev = f.size() == 5 ? detail::parse_double(f[3]) : std::nullopt;
    auto count = f.size() == 5 ? detail::parse_int<std::uint32_t>(f[4]) : std::nullopt;
    if (f.size() != 5 || f[0] != "interval" || !index || *index != j || !mean || !stdev ||
        !count) {
      throw Error(ErrorCode::MalformedLine, "expected 'interval " + std::to_string(j) +
                                                " <mean_us> <stdev_us> <count>'",
                  no);
    }
    stats.push_back({*mean, *stdev, *count});
  }

  try {
    return Signature(std::move(activity), std::move(device), std::move(packets),
                     std::move(stats));
  } catch (const Error& e) {
    throw Error(ErrorCode::MalformedLine, e.what(), header_no);
  }
}

// ---------------------------------------------------------------------------
// Names and normalization

NameTable NameTable::parse(std::string_view text) {
  NameTable table;
  std::size_t line_no = 0;
  for (std::string_view line : detail::lines(text)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    const auto tokens = detail::split_ws(line);
    if (tokens.empty()) continue;
    if (tokens.size() != 2) {
      throw Error(ErrorCode::MalformedLine, "expected '<address> <name>'", line_no);
    }
    table.add(std::string(tokens[0]), std::string(tokens[1]));
  }
  return table;
}

void NameTable::add(std::string address, std::string name) {
  names_.insert_or_assign(std::move(address), std::move(name));
}

std::string NameTable::resolve(std::string_view address) const {
  if (auto it = names_.find(address); it != names_.end()) return it->second;
  return std::string(address);
}

BasePacket canonicalize(BasePacket packet, const NameTable& names) {
  packet.device_addr = names.resolve(packet.device_addr);
  packet.server_name = names.resolve(packet.server_name);
  return packet;
}

BasePacket normalize_packet(const RawPacketRecord& raw, Direction direction,
                            const NameTable& names) {
  const bool outbound = direction == Direction::DeviceToServer;
  BasePacket base;
  base.device_addr = names.resolve(outbound ? raw.src_addr : raw.dst_addr);
  base.server_name = names.resolve(outbound ? raw.dst_addr : raw.src_addr);
  const auto& remote_port = outbound ? raw.dst_port : raw.src_port;
  base.server_port = remote_port.value_or(0);
  base.protocol = raw.protocol;
  base.direction = direction;
  base.length = raw.total_length;
  base.payload_digest = raw.payload_digest;
  return base;
}

// ---------------------------------------------------------------------------
// Clustering

std::map<std::string, DeviceCluster> cluster_by_device_indexed(const TrafficLog& log) {
  std::map<std::string, std::vector<std::size_t>> positions;
  for (std::size_t i = 0; i < log.size(); ++i) {
    positions[log[i].base.device_addr].push_back(i);
  }
  std::map<std::string, DeviceCluster> out;
  for (auto& [device, idx] : positions) {
    std::vector<TimedPacket> packets;
    packets.reserve(idx.size());
    for (std::size_t i : idx) packets.push_back(log[i]);
    out.emplace(device, DeviceCluster{TrafficLog(std::move(packets), device), std::move(idx)});
  }
  return out;
}

std::map<std::string, TrafficLog> cluster_by_device(const TrafficLog& log) {
  std::map<std::string, TrafficLog> out;
  for (auto& [device, cluster] : cluster_by_device_indexed(log)) {
    out.emplace(device, std::move(cluster.log));
  }
  return out;
}

TrafficLog merge_logs(std::span<const TrafficLog> logs) {
  std::vector<TimedPacket> all;
  for (const auto& log : logs) {
    all.insert(all.end(), log.packets().begin(), log.packets().end());
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const TimedPacket& a, const TimedPacket& b) { return a.t < b.t; });
  return TrafficLog(std::move(all));
}

}  // namespace athena
