#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "athena/traffic_model.hpp"

namespace athena {

/// One background-filtered capture of a single triggered activity.
struct LabeledCapture {
  std::string activity_name;
  std::string device_label;
  TrafficLog foreground;
};

inline constexpr double kDefaultEpsFloorUs = 100.0;

/// Per-gap matching tolerance, eps_j = max(r * sigma_j, floor).
struct ToleranceVector {
  std::vector<double> epsilons_us;
  double r = 1.0;

  std::size_t size() const { return epsilons_us.size(); }
  double seconds(std::size_t j) const { return epsilons_us[j] * 1e-6; }
};

/// Errors: InvalidArgument when r < 1 or the floor is not positive.
ToleranceVector tolerance_vector(const Signature& signature, double r,
                                 double eps_floor_us = kDefaultEpsFloorUs);

/// Tolerance vector with the same eps for every gap.
ToleranceVector uniform_tolerance(const Signature& signature, double eps_us);

struct CaptureAlignment {
  std::vector<BasePacket> modal_sequence;
  std::vector<std::size_t> survivors;          // capture positions, input order
  std::vector<std::size_t> discarded;
  std::vector<std::vector<Micros>> gaps;       // one gap vector per survivor
};

/// Keeps the captures whose base-packet sequence equals the most common
/// one. The modal sequence must be held by strictly more than
/// `quorum` of the captures, otherwise NoModalMajority. TooFewCaptures
/// below two captures.
CaptureAlignment align_captures(std::span<const LabeledCapture> captures,
                                double quorum = 0.5,
                                PayloadPolicy policy = PayloadPolicy::Ignore);

/// Population mean and standard deviation of `samples_us`.
IntervalStat interval_stat(std::span<const double> samples_us);

struct SignatureGenOptions {
  double quorum = 0.5;
  PayloadPolicy payload_policy = PayloadPolicy::Ignore;
};

/// Aggregates repeated captures into a signature whose gap j is the mean of
/// the surviving captures' gap j (rounded to whole microseconds, at least 1).
/// Errors: TooFewCaptures, InconsistentCaptures (mixed labels or an empty
/// modal sequence), NoModalMajority.
Signature generate_signature(std::span<const LabeledCapture> captures,
                             const SignatureGenOptions& options = {});

}  // namespace athena
