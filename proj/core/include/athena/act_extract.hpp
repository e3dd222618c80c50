#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "athena/sig_match.hpp"
#include "athena/signature_gen.hpp"
#include "athena/traffic_model.hpp"

namespace athena {

struct ActivityEvent {
  std::string activity_name;
  std::string device;
  Match match;  // positions in the log passed to the extractor
  Micros start_t{0};
  Micros end_t{0};

  friend bool operator==(const ActivityEvent&, const ActivityEvent&) = default;
};

/// A packet claimed by the earliest matches of two or more signatures in
/// the same round.
struct AnomalyReport {
  std::size_t packet_index = 0;
  std::vector<std::string> signatures;  // sorted, at least two

  friend bool operator==(const AnomalyReport&, const AnomalyReport&) = default;
};

struct ExtractionResult {
  std::vector<ActivityEvent> events;  // ordered by end_t
  std::vector<AnomalyReport> anomalies;
  TrafficLog residual;
};

/// Tolerance vector per activity name.
using ToleranceSet = std::map<std::string, ToleranceVector, std::less<>>;

ToleranceSet tolerance_set(const SignatureSet& signatures, double r,
                           double eps_floor_us = kDefaultEpsFloorUs);

struct ExtractOptions {
  /// Record every non-overlapping match per signature instead of the
  /// earliest-match/prefix-removal loop.
  bool concurrent = false;
  /// Worker threads for per-signature DAG builds and per-device runs.
  std::size_t jobs = 1;
  PayloadPolicy payload_policy = PayloadPolicy::Ignore;
};

/// Orders by first index, then by last index (earlier completion first).
std::strong_ordering compare_order(const Match& a, const Match& b);
/// As above, with the activity name as the final tie-break.
std::strong_ordering compare_order(const Match& a, std::string_view name_a, const Match& b,
                                   std::string_view name_b);

/// Unveils the activity sequence of one device's foreground log. Each round
/// builds every signature's DAG on the remaining packets, emits the
/// signature with the earliest match and drops every packet no later than
/// that match's last packet. Errors: InvalidArgument when a signature has
/// no tolerance vector.
ExtractionResult act_extract(const TrafficLog& log, const SignatureSet& signatures,
                             const ToleranceSet& tolerances, const ExtractOptions& options = {});

struct DeviceProfile {
  SignatureSet signatures;
  ToleranceSet tolerances;
};

struct MultiDeviceResult {
  /// Per device; event and anomaly indices refer to the mixed input log,
  /// residuals are per-device sublogs.
  std::map<std::string, ExtractionResult> devices;
  std::vector<std::string> unknown_devices;
};

MultiDeviceResult extract_all_devices(const TrafficLog& mixed_log,
                                      const std::map<std::string, DeviceProfile>& profiles,
                                      const ExtractOptions& options = {});

}  // namespace athena
