#include "athena/act_extract.hpp"

#include <algorithm>
#include <optional>
#include <set>

#include "athena/errors.hpp"
#include "athena/parallel.hpp"

namespace athena {

ToleranceSet tolerance_set(const SignatureSet& signatures, double r, double eps_floor_us) {
  ToleranceSet out;
  for (const auto& s : signatures.signatures()) {
    out.emplace(s.activity_name(), tolerance_vector(s, r, eps_floor_us));
  }
  return out;
}

std::strong_ordering compare_order(const Match& a, const Match& b) {
  if (auto c = a.first() <=> b.first(); c != 0) return c;
  return a.last() <=> b.last();
}

std::strong_ordering compare_order(const Match& a, std::string_view name_a, const Match& b,
                                   std::string_view name_b) {
  if (auto c = compare_order(a, b); c != 0) return c;
  return name_a <=> name_b;
}

namespace {

const ToleranceVector& lookup(const ToleranceSet& tolerances, const Signature& s) {
  auto it = tolerances.find(s.activity_name());
  if (it == tolerances.end()) {
    throw Error(ErrorCode::InvalidArgument, "no tolerance vector for '" + s.activity_name() + "'");
  }
  return it->second;
}

ActivityEvent make_event(const TrafficLog& log, std::string_view name, Match match) {
  ActivityEvent e;
  e.activity_name = std::string(name);
  e.device = log[match.first()].base.device_addr;
  e.start_t = log[match.first()].t;
  e.end_t = log[match.last()].t;
  e.match = std::move(match);
  return e;
}

std::vector<AnomalyReport> to_reports(const std::map<std::size_t, std::set<std::string>>& claims) {
  std::vector<AnomalyReport> out;
  for (const auto& [index, names] : claims) {
    if (names.size() >= 2) out.push_back({index, {names.begin(), names.end()}});
  }
  return out;
}

ExtractionResult extract_sequential(const TrafficLog& log, const SignatureSet& signatures,
                                    const ToleranceSet& tolerances, const ExtractOptions& options) {
  const std::size_t k_count = signatures.size();
  // Removing every packet up to a timestamp always leaves a suffix of the
  // log, so the remaining packets are the range [start, m).
  std::size_t start = 0;

  ExtractionResult result;
  std::map<std::size_t, std::set<std::string>> conflicts;
  std::vector<std::optional<Match>> earliest(k_count);

  while (start < log.size()) {
    const auto rest = log.packets().subspan(start);
    parallel_for(k_count, options.jobs, [&](std::size_t k) {
      const Signature& s = signatures[k];
      auto found = earliest_match(sig_match(rest, s, lookup(tolerances, s), options.payload_policy));
      if (found) {
        for (auto& idx : found->indices) idx += start;
      }
      earliest[k] = std::move(found);
    });

    std::optional<std::size_t> winner;
    std::map<std::size_t, std::set<std::string>> claims;
    for (std::size_t k = 0; k < k_count; ++k) {
      if (!earliest[k]) continue;
      for (std::size_t idx : earliest[k]->indices) claims[idx].insert(signatures[k].activity_name());
      if (!winner || compare_order(*earliest[k], signatures[k].activity_name(),
                                   *earliest[*winner], signatures[*winner].activity_name()) < 0) {
        winner = k;
      }
    }
    if (!winner) break;
    for (auto& [idx, names] : claims) {
      if (names.size() >= 2) conflicts[idx].insert(names.begin(), names.end());
    }

    ActivityEvent event =
        make_event(log, signatures[*winner].activity_name(), std::move(*earliest[*winner]));
    start = event.match.last() + 1;
    result.events.push_back(std::move(event));
  }

  result.anomalies = to_reports(conflicts);
  std::vector<std::size_t> remaining;
  for (std::size_t i = start; i < log.size(); ++i) remaining.push_back(i);
  result.residual = log.subset(remaining);
  return result;
}

ExtractionResult extract_concurrent(const TrafficLog& log, const SignatureSet& signatures,
                                    const ToleranceSet& tolerances, const ExtractOptions& options) {
  const std::size_t k_count = signatures.size();
  std::vector<std::vector<Match>> per_signature(k_count);
  parallel_for(k_count, options.jobs, [&](std::size_t k) {
    const Signature& s = signatures[k];
    per_signature[k] = nonoverlapping_matches(log, s, lookup(tolerances, s), options.payload_policy);
  });

  ExtractionResult result;
  std::map<std::size_t, std::set<std::string>> claims;
  std::vector<char> claimed(log.size(), 0);
  for (std::size_t k = 0; k < k_count; ++k) {
    for (auto& m : per_signature[k]) {
      for (std::size_t idx : m.indices) {
        claims[idx].insert(signatures[k].activity_name());
        claimed[idx] = 1;
      }
      result.events.push_back(make_event(log, signatures[k].activity_name(), std::move(m)));
    }
  }
  std::sort(result.events.begin(), result.events.end(),
            [](const ActivityEvent& a, const ActivityEvent& b) {
              if (a.end_t != b.end_t) return a.end_t < b.end_t;
              return compare_order(a.match, a.activity_name, b.match, b.activity_name) < 0;
            });
  result.anomalies = to_reports(claims);

  std::vector<std::size_t> unclaimed;
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (!claimed[i]) unclaimed.push_back(i);
  }
  result.residual = log.subset(unclaimed);
  return result;
}

}  // namespace

ExtractionResult act_extract(const TrafficLog& log, const SignatureSet& signatures,
                             const ToleranceSet& tolerances, const ExtractOptions& options) {
  for (const auto& s : signatures.signatures()) lookup(tolerances, s);
  return options.concurrent ? extract_concurrent(log, signatures, tolerances, options)
                            : extract_sequential(log, signatures, tolerances, options);
}

MultiDeviceResult extract_all_devices(const TrafficLog& mixed_log,
                                      const std::map<std::string, DeviceProfile>& profiles,
                                      const ExtractOptions& options) {
  auto clusters = cluster_by_device_indexed(mixed_log);
  std::vector<const std::string*> known;
  MultiDeviceResult out;
  for (const auto& [device, cluster] : clusters) {
    if (profiles.contains(device)) {
      known.push_back(&device);
    } else {
      out.unknown_devices.push_back(device);
    }
  }

  std::vector<ExtractionResult> results(known.size());
  // Devices fan out across workers; signatures within a device run serially.
  ExtractOptions per_device = options;
  per_device.jobs = 1;
  parallel_for(known.size(), options.jobs, [&](std::size_t d) {
    const auto& cluster = clusters.at(*known[d]);
    const auto& profile = profiles.at(*known[d]);
    ExtractionResult r = act_extract(cluster.log, profile.signatures, profile.tolerances, per_device);
    for (auto& e : r.events) {
      for (auto& idx : e.match.indices) idx = cluster.source_indices[idx];
    }
    for (auto& a : r.anomalies) a.packet_index = cluster.source_indices[a.packet_index];
    results[d] = std::move(r);
  });
  for (std::size_t d = 0; d < known.size(); ++d) {
    out.devices.emplace(*known[d], std::move(results[d]));
  }
  return out;
}

}  // namespace athena
