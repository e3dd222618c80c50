#include "athena/capture_ingest.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <tuple>

#include "athena/errors.hpp"
#include "text_util.hpp"

namespace athena {

namespace {

constexpr std::uint32_t kMagicNative = 0xa1b2c3d4;
constexpr std::uint32_t kMagicSwapped = 0xd4c3b2a1;
constexpr std::uint32_t kLinkEthernet = 1;
constexpr std::size_t kGlobalHeaderSize = 24;
constexpr std::size_t kRecordHeaderSize = 16;
constexpr std::size_t kEthernetHeaderSize = 14;
constexpr std::uint16_t kEtherTypeIpv4 = 0x0800;

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, bool swapped)
      : bytes_(bytes), swapped_(swapped) {}

  std::uint32_t u32(std::size_t offset) const {
    std::uint32_t le = std::uint32_t{bytes_[offset]} |
                       (std::uint32_t{bytes_[offset + 1]} << 8) |
                       (std::uint32_t{bytes_[offset + 2]} << 16) |
                       (std::uint32_t{bytes_[offset + 3]} << 24);
    // Magic was read little-endian; "swapped" means the file is big-endian.
    if (!swapped_) return le;
    return ((le & 0xff) << 24) | ((le & 0xff00) << 8) | ((le >> 8) & 0xff00) | (le >> 24);
  }

 private:
  std::span<const std::uint8_t> bytes_;
  bool swapped_;
};

std::uint16_t be16(std::span<const std::uint8_t> b, std::size_t off) {
  return static_cast<std::uint16_t>((b[off] << 8) | b[off + 1]);
}

std::uint32_t be32(std::span<const std::uint8_t> b, std::size_t off) {
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

std::string fnv1a_hex(std::span<const std::uint8_t> data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Decodes one Ethernet frame; nullopt when it is not a usable IPv4 packet.
std::optional<RawPacketRecord> decode_frame(std::span<const std::uint8_t> frame, Micros ts,
                                            const PcapOptions& options) {
  if (frame.size() < kEthernetHeaderSize + 20) return std::nullopt;
  if (be16(frame, 12) != kEtherTypeIpv4) return std::nullopt;

  auto ip = frame.subspan(kEthernetHeaderSize);
  if ((ip[0] >> 4) != 4) return std::nullopt;
  const std::size_t ihl = static_cast<std::size_t>(ip[0] & 0x0f) * 4;
  const std::uint32_t total_length = be16(ip, 2);
  if (ihl < 20 || ip.size() < ihl || total_length < ihl) return std::nullopt;

  RawPacketRecord rec;
  rec.ts = ts;
  rec.protocol = Protocol{ip[9]};
  rec.src_addr = format_ipv4(be32(ip, 12));
  rec.dst_addr = format_ipv4(be32(ip, 16));
  rec.total_length = total_length;

  auto transport = ip.subspan(ihl);
  std::size_t header = 0;
  if (rec.protocol.is_tcp()) {
    if (transport.size() < 20 || total_length < ihl + 20) return std::nullopt;
    rec.src_port = be16(transport, 0);
    rec.dst_port = be16(transport, 2);
    rec.tcp_seq = be32(transport, 4);
    header = static_cast<std::size_t>(transport[12] >> 4) * 4;
    rec.tcp_flags = transport[13];
    if (header < 20 || total_length < ihl + header) return std::nullopt;
  } else if (rec.protocol.is_udp()) {
    if (transport.size() < 8 || total_length < ihl + 8) return std::nullopt;
    rec.src_port = be16(transport, 0);
    rec.dst_port = be16(transport, 2);
    header = 8;
  }
  rec.payload_length = total_length - static_cast<std::uint32_t>(ihl + header);

  if (options.payload_digest && rec.payload_length > 0) {
    const std::size_t available =
        transport.size() > header ? transport.size() - header : std::size_t{0};
    const std::size_t take = std::min<std::size_t>(available, rec.payload_length);
    rec.payload_digest = fnv1a_hex(transport.subspan(header, take));
  }
  return rec;
}

}  // namespace

// ---------------------------------------------------------------------------
// Addresses

std::optional<std::uint32_t> parse_ipv4(std::string_view dotted) {
  std::uint32_t value = 0;
  int parts = 0;
  std::size_t start = 0;
  while (start <= dotted.size()) {
    std::size_t end = dotted.find('.', start);
    if (end == std::string_view::npos) end = dotted.size();
    auto octet = detail::parse_int<unsigned>(dotted.substr(start, end - start));
    if (!octet || *octet > 255 || end - start > 3) return std::nullopt;
    value = (value << 8) | *octet;
    ++parts;
    start = end + 1;
    if (end == dotted.size()) break;
  }
  if (parts != 4) return std::nullopt;
  return value;
}

std::string format_ipv4(std::uint32_t a) {
  return std::to_string(a >> 24) + "." + std::to_string((a >> 16) & 0xff) + "." +
         std::to_string((a >> 8) & 0xff) + "." + std::to_string(a & 0xff);
}

Ipv4Prefix::Ipv4Prefix(std::uint32_t network, unsigned length) : length_(length) {
  if (length > 32) throw Error(ErrorCode::InvalidArgument, "prefix length above 32");
  mask_ = length == 0 ? 0u : ~std::uint32_t{0} << (32 - length);
  network_ = network & mask_;
}

Ipv4Prefix Ipv4Prefix::parse(std::string_view cidr) {
  const auto slash = cidr.find('/');
  auto address = parse_ipv4(cidr.substr(0, slash));
  std::optional<unsigned> length = 32u;
  if (slash != std::string_view::npos) length = detail::parse_int<unsigned>(cidr.substr(slash + 1));
  if (!address || !length || *length > 32) {
    throw Error(ErrorCode::InvalidArgument, "bad CIDR prefix '" + std::string(cidr) + "'");
  }
  return Ipv4Prefix(*address, *length);
}

bool Ipv4Prefix::contains(std::uint32_t address) const {
  return (address & mask_) == network_;
}

bool Ipv4Prefix::contains(std::string_view dotted) const {
  auto a = parse_ipv4(dotted);
  return a && contains(*a);
}

std::string Ipv4Prefix::to_string() const {
  return format_ipv4(network_) + "/" + std::to_string(length_);
}

// ---------------------------------------------------------------------------
// pcap

std::vector<RawPacketRecord> read_pcap(std::span<const std::uint8_t> bytes,
                                       const PcapOptions& options) {
  if (bytes.size() < 4) throw Error(ErrorCode::BadMagic, "file shorter than pcap magic", 0);
  const std::uint32_t magic = ByteReader(bytes, false).u32(0);
  if (magic != kMagicNative && magic != kMagicSwapped) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08x", magic);
    throw Error(ErrorCode::BadMagic, std::string("unrecognised magic ") + buf, 0);
  }
  if (bytes.size() < kGlobalHeaderSize) {
    throw Error(ErrorCode::TruncatedRecord, "truncated global header", 0);
  }
  const ByteReader reader(bytes, magic == kMagicSwapped);
  const std::uint32_t link_type = reader.u32(20);
  if (link_type != kLinkEthernet) {
    throw Error(ErrorCode::UnsupportedLinkType,
                "link type " + std::to_string(link_type) + " is not Ethernet", link_type);
  }

  std::vector<RawPacketRecord> out;
  std::size_t offset = kGlobalHeaderSize;
  while (offset < bytes.size()) {
    if (bytes.size() - offset < kRecordHeaderSize) {
      throw Error(ErrorCode::TruncatedRecord, "truncated record header", offset);
    }
    const std::uint32_t ts_sec = reader.u32(offset);
    const std::uint32_t ts_usec = reader.u32(offset + 4);
    const std::uint32_t incl_len = reader.u32(offset + 8);
    if (bytes.size() - offset - kRecordHeaderSize < incl_len) {
      throw Error(ErrorCode::TruncatedRecord, "record data runs past end of file", offset);
    }
    const Micros ts{static_cast<std::int64_t>(ts_sec) * 1'000'000 + ts_usec};
    if (auto rec = decode_frame(bytes.subspan(offset + kRecordHeaderSize, incl_len), ts,
                                options)) {
      out.push_back(std::move(*rec));
    }
    offset += kRecordHeaderSize + incl_len;
  }
  return out;
}

std::optional<Direction> infer_direction(const RawPacketRecord& raw,
                                         const Ipv4Prefix& home_prefix) {
  const bool src_home = home_prefix.contains(raw.src_addr);
  const bool dst_home = home_prefix.contains(raw.dst_addr);
  if (src_home == dst_home) return std::nullopt;
  return src_home ? Direction::DeviceToServer : Direction::ServerToDevice;
}

IngestResult ingest(std::span<const std::uint8_t> bytes, const Ipv4Prefix& home_prefix,
                    const NameTable& names, const IngestOptions& options) {
  auto records = read_pcap(bytes, PcapOptions{options.payload_digest});
  IngestResult result;

  // (src, dst, sport, dport, seq, payload length)
  using SegmentKey = std::tuple<std::string, std::string, std::uint16_t, std::uint16_t,
                                std::uint32_t, std::uint32_t>;
  std::set<SegmentKey> seen_segments;

  std::vector<TimedPacket> packets;
  packets.reserve(records.size());
  for (const auto& rec : records) {
    const auto direction = infer_direction(rec, home_prefix);
    if (!direction) {
      ++result.dropped_local;
      continue;
    }
    if (rec.protocol.is_tcp() && rec.payload_length == 0 && options.drop_tcp_control) {
      ++result.dropped_control;
      continue;
    }
    if (rec.protocol.is_tcp() && rec.payload_length > 0 && options.dedup_retransmissions) {
      SegmentKey key{rec.src_addr, rec.dst_addr, rec.src_port.value_or(0),
                     rec.dst_port.value_or(0), rec.tcp_seq, rec.payload_length};
      if (!seen_segments.insert(std::move(key)).second) {
        ++result.dropped_retransmissions;
        continue;
      }
    }
    packets.push_back({normalize_packet(rec, *direction, names), rec.ts});
  }

  std::stable_sort(packets.begin(), packets.end(),
                   [](const TimedPacket& a, const TimedPacket& b) { return a.t < b.t; });
  for (std::size_t i = 1; i < packets.size(); ++i) {
    if (packets[i].t <= packets[i - 1].t) {
      const Micros original = packets[i].t;
      packets[i].t = packets[i - 1].t + Micros{1};
      result.warnings.push_back("packet " + std::to_string(i + 1) + ": timestamp " +
                                std::to_string(original.count()) + "us moved to " +
                                std::to_string(packets[i].t.count()) + "us");
    }
  }
  result.log = TrafficLog(std::move(packets));
  return result;
}

}  // namespace athena
