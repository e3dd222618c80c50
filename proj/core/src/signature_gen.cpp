#include "athena/signature_gen.hpp"

#include <algorithm>
#include <cmath>

#include "athena/errors.hpp"

namespace athena {

ToleranceVector tolerance_vector(const Signature& signature, double r, double eps_floor_us) {
  if (!(r >= 1.0)) throw Error(ErrorCode::InvalidArgument, "tolerance multiplier r must be >= 1");
  if (!(eps_floor_us > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps floor must be positive");
  ToleranceVector eps;
  eps.r = r;
  eps.epsilons_us.reserve(signature.gap_count());
  for (const auto& stat : signature.interval_stats()) {
    eps.epsilons_us.push_back(std::max(r * stat.stdev_us, eps_floor_us));
  }
  return eps;
}

ToleranceVector uniform_tolerance(const Signature& signature, double eps_us) {
  return {std::vector<double>(signature.gap_count(), eps_us), 1.0};
}

namespace {

std::vector<BasePacket> base_sequence(const TrafficLog& log) {
  std::vector<BasePacket> seq;
  seq.reserve(log.size());
  for (const auto& p : log.packets()) seq.push_back(p.base);
  return seq;
}

bool same_sequence(std::span<const BasePacket> a, std::span<const BasePacket> b,
                   PayloadPolicy policy) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!same_base(a[i], b[i], policy)) return false;
  }
  return true;
}

}  // namespace

CaptureAlignment align_captures(std::span<const LabeledCapture> captures, double quorum,
                                PayloadPolicy policy) {
  if (captures.size() < 2) {
    throw Error(ErrorCode::TooFewCaptures,
                "need at least 2 captures, got " + std::to_string(captures.size()));
  }

  // Group captures by base-packet sequence; groups keep first-seen order so
  // ties in group size resolve to the earliest capture.
  struct Group {
    std::vector<BasePacket> sequence;
    std::vector<std::size_t> members;
  };
  std::vector<Group> groups;
  for (std::size_t c = 0; c < captures.size(); ++c) {
    auto seq = base_sequence(captures[c].foreground);
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) {
      return same_sequence(g.sequence, seq, policy);
    });
    if (it == groups.end()) {
      groups.push_back({std::move(seq), {c}});
    } else {
      it->members.push_back(c);
    }
  }
  const auto modal = std::max_element(groups.begin(), groups.end(),
                                      [](const Group& a, const Group& b) {
                                        return a.members.size() < b.members.size();
                                      });
  const double share =
      static_cast<double>(modal->members.size()) / static_cast<double>(captures.size());
  if (!(share > quorum)) {
    throw Error(ErrorCode::NoModalMajority,
                "most common packet sequence covers " + std::to_string(modal->members.size()) +
                    " of " + std::to_string(captures.size()) + " captures");
  }

  CaptureAlignment out;
  out.modal_sequence = modal->sequence;
  out.survivors = modal->members;
  for (std::size_t c = 0; c < captures.size(); ++c) {
    if (!std::binary_search(out.survivors.begin(), out.survivors.end(), c)) {
      out.discarded.push_back(c);
    }
  }
  for (std::size_t c : out.survivors) {
    const auto packets = captures[c].foreground.packets();
    std::vector<Micros> gaps;
    for (std::size_t j = 0; j + 1 < packets.size(); ++j) {
      gaps.push_back(packets[j + 1].t - packets[j].t);
    }
    out.gaps.push_back(std::move(gaps));
  }
  return out;
}

IntervalStat interval_stat(std::span<const double> samples_us) {
  // Welford's update.
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;
  for (double x : samples_us) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
  IntervalStat stat;
  stat.mean_us = mean;
  stat.stdev_us = n > 0 ? std::sqrt(std::max(0.0, m2 / static_cast<double>(n))) : 0.0;
  stat.sample_count = static_cast<std::uint32_t>(n);
  return stat;
}

Signature generate_signature(std::span<const LabeledCapture> captures,
                             const SignatureGenOptions& options) {
  if (captures.size() < 2) {
    throw Error(ErrorCode::TooFewCaptures,
                "need at least 2 captures, got " + std::to_string(captures.size()));
  }
  for (const auto& c : captures) {
    if (c.activity_name != captures.front().activity_name ||
        c.device_label != captures.front().device_label) {
      throw Error(ErrorCode::InconsistentCaptures,
                  "captures mix activities or devices: '" + captures.front().activity_name +
                      "' and '" + c.activity_name + "'");
    }
  }

  const CaptureAlignment aligned = align_captures(captures, options.quorum, options.payload_policy);
  if (aligned.modal_sequence.empty()) {
    throw Error(ErrorCode::InconsistentCaptures, "modal packet sequence is empty");
  }

  const std::size_t n = aligned.modal_sequence.size();
  std::vector<TimedPacket> packets;
  std::vector<IntervalStat> stats;
  packets.push_back({aligned.modal_sequence[0], Micros{0}});
  std::vector<double> samples(aligned.gaps.size());
  for (std::size_t j = 0; j + 1 < n; ++j) {
    for (std::size_t s = 0; s < aligned.gaps.size(); ++s) {
      samples[s] = static_cast<double>(aligned.gaps[s][j].count());
    }
    const IntervalStat stat = interval_stat(samples);
    const auto tau = std::max<std::int64_t>(1, std::llround(stat.mean_us));
    packets.push_back({aligned.modal_sequence[j + 1], packets.back().t + Micros{tau}});
    stats.push_back(stat);
  }
  return Signature(captures.front().activity_name, captures.front().device_label,
                   std::move(packets), std::move(stats));
}

}  // namespace athena
