#include "athena/sig_match.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "athena/errors.hpp"

namespace athena {

bool delta_valid(const TimedPacket& p1, const TimedPacket& p2, const TimedPacket& q1,
                 const TimedPacket& q2, double delta_us, PayloadPolicy policy) {
  if (!same_base(p1.base, q1.base, policy) || !same_base(p2.base, q2.base, policy)) {
    return false;
  }
  const std::int64_t deviation = ((p2.t - p1.t) - (q2.t - q1.t)).count();
  return static_cast<double>(deviation < 0 ? -deviation : deviation) <= delta_us;
}

std::size_t MatchDag::vertex_count() const {
  std::size_t count = 0;
  for (const auto& level : levels_) count += level.size();
  return count;
}

std::size_t MatchDag::edge_count() const {
  std::size_t count = 0;
  for (const auto& level : levels_) {
    for (const auto& node : level) count += node.preds.size();
  }
  return count;
}

std::vector<MatchVertex> MatchDag::vertices() const {
  std::vector<MatchVertex> out;
  for (std::size_t j = 0; j < levels_.size(); ++j) {
    for (const auto& node : levels_[j]) out.push_back({node.log_index, j});
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<MatchEdge> MatchDag::edges() const {
  std::vector<MatchEdge> out;
  for (std::size_t j = 1; j < levels_.size(); ++j) {
    for (const auto& node : levels_[j]) {
      for (std::uint32_t p : node.preds) {
        out.push_back({{node.log_index, j}, {levels_[j - 1][p].log_index, j - 1}});
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

MatchDag sig_match(const TrafficLog& log, const Signature& signature,
                   const ToleranceVector& eps, PayloadPolicy policy) {
  return sig_match(log.packets(), signature, eps, policy);
}

MatchDag sig_match(std::span<const TimedPacket> packets, const Signature& signature,
                   const ToleranceVector& eps, PayloadPolicy policy) {
  const std::size_t n = signature.size();
  if (eps.size() != n - 1) {
    throw Error(ErrorCode::DimensionMismatch,
                "tolerance vector has " + std::to_string(eps.size()) + " entries, signature has " +
                    std::to_string(n - 1) + " gaps");
  }

  // Signature packets collapse into distinct base packets so each log packet
  // is compared once per distinct base rather than once per level.
  const auto sig_packets = signature.packets();
  std::vector<std::size_t> level_class(n);
  std::vector<const BasePacket*> classes;
  for (std::size_t j = 0; j < n; ++j) {
    auto it = std::find_if(classes.begin(), classes.end(),
                           [&](const BasePacket* b) { return *b == sig_packets[j].base; });
    level_class[j] = static_cast<std::size_t>(it - classes.begin());
    if (it == classes.end()) classes.push_back(&sig_packets[j].base);
  }

  // Integer deviations satisfy |d| <= eps iff |d| <= floor(eps).
  std::vector<std::int64_t> slack(n > 0 ? n - 1 : 0);
  for (std::size_t j = 0; j + 1 < n; ++j) {
    slack[j] = static_cast<std::int64_t>(std::floor(std::min(eps.epsilons_us[j], 1e15)));
  }

  MatchDag dag;
  dag.log_size_ = packets.size();
  dag.levels_.resize(n);
  std::vector<char> class_match(classes.size());

  for (std::size_t i = 0; i < packets.size(); ++i) {
    for (std::size_t c = 0; c < classes.size(); ++c) {
      class_match[c] = same_base(packets[i].base, *classes[c], policy) ? 1 : 0;
    }
    const std::int64_t t_i = packets[i].t.count();
    for (std::size_t j = 0; j < n; ++j) {
      if (!class_match[level_class[j]]) continue;
      auto& here = dag.levels_[j];
      if (j == 0) {
        here.push_back({static_cast<std::uint32_t>(i), {}, {}, false});
        continue;
      }
      const auto& below = dag.levels_[j - 1];
      // Only k < i qualifies; node i itself may already sit on level j-1.
      std::size_t end = below.size();
      if (end > 0 && below[end - 1].log_index == i) --end;
      const std::int64_t target = t_i - signature.gap(j - 1).count();
      const std::int64_t lo = target - slack[j - 1];
      const std::int64_t hi = target + slack[j - 1];
      auto first = std::lower_bound(
          below.begin(), below.begin() + static_cast<std::ptrdiff_t>(end), lo,
          [&](const MatchDag::Node& node, std::int64_t t) {
            return packets[node.log_index].t.count() < t;
          });
      std::vector<std::uint32_t> preds;
      for (auto it = first; it != below.begin() + static_cast<std::ptrdiff_t>(end); ++it) {
        if (packets[it->log_index].t.count() > hi) break;
        preds.push_back(static_cast<std::uint32_t>(it - below.begin()));
      }
      if (!preds.empty()) {
        here.push_back({static_cast<std::uint32_t>(i), std::move(preds), {}, false});
      }
    }
  }

  for (std::size_t j = 1; j < n; ++j) {
    auto& level = dag.levels_[j];
    for (std::size_t pos = 0; pos < level.size(); ++pos) {
      for (std::uint32_t p : level[pos].preds) {
        dag.levels_[j - 1][p].succs.push_back(static_cast<std::uint32_t>(pos));
      }
    }
  }
  if (n > 0) {
    for (auto& node : dag.levels_[n - 1]) node.completes = true;
    for (std::size_t j = n - 1; j-- > 0;) {
      for (auto& node : dag.levels_[j]) {
        node.completes = std::any_of(node.succs.begin(), node.succs.end(), [&](std::uint32_t s) {
          return dag.levels_[j + 1][s].completes;
        });
      }
    }
  }
  return dag;
}

MatchList enumerate_matches(const MatchDag& dag, std::size_t limit) {
  MatchList out;
  const std::size_t n = dag.signature_size();
  if (n == 0 || limit == 0) return out;
  std::vector<std::size_t> path(n);
  bool stop = false;

  std::function<void(std::size_t, std::size_t)> walk = [&](std::size_t j, std::size_t pos) {
    const auto& node = dag.level(j)[pos];
    path[j] = node.log_index;
    if (j + 1 == n) {
      if (out.matches.size() == limit) {
        out.truncated = true;
        stop = true;
        return;
      }
      out.matches.push_back({path});
      return;
    }
    for (std::uint32_t s : node.succs) {
      if (!dag.level(j + 1)[s].completes) continue;
      walk(j + 1, s);
      if (stop) return;
    }
  };

  const auto& roots = dag.level(0);
  for (std::size_t pos = 0; pos < roots.size() && !stop; ++pos) {
    if (roots[pos].completes) walk(0, pos);
  }
  return out;
}

std::optional<Match> earliest_match(const MatchDag& dag) {
  const std::size_t n = dag.signature_size();
  if (n == 0 || !dag.has_match()) return std::nullopt;
  const auto& roots = dag.level(0);
  auto root = std::find_if(roots.begin(), roots.end(),
                           [](const MatchDag::Node& node) { return node.completes; });
  if (root == roots.end()) return std::nullopt;

  Match m;
  m.indices.reserve(n);
  const MatchDag::Node* node = &*root;
  m.indices.push_back(node->log_index);
  for (std::size_t j = 1; j < n; ++j) {
    const auto& above = dag.level(j);
    for (std::uint32_t s : node->succs) {
      if (above[s].completes) {
        node = &above[s];
        break;
      }
    }
    m.indices.push_back(node->log_index);
  }
  return m;
}

std::vector<Match> nonoverlapping_matches(const TrafficLog& log, const Signature& signature,
                                          const ToleranceVector& eps, PayloadPolicy policy) {
  std::vector<std::size_t> remaining(log.size());
  for (std::size_t i = 0; i < remaining.size(); ++i) remaining[i] = i;

  std::vector<Match> out;
  while (!remaining.empty()) {
    const TrafficLog sub = log.subset(remaining);
    const auto found = earliest_match(sig_match(sub, signature, eps, policy));
    if (!found) break;
    Match mapped;
    for (std::size_t idx : found->indices) mapped.indices.push_back(remaining[idx]);
    std::vector<std::size_t> kept;
    kept.reserve(remaining.size() - mapped.indices.size());
    std::set_difference(remaining.begin(), remaining.end(), mapped.indices.begin(),
                        mapped.indices.end(), std::back_inserter(kept));
    remaining = std::move(kept);
    out.push_back(std::move(mapped));
  }
  return out;
}

}  // namespace athena
