#pragma once

// Time-sensitive subsequence matching of one signature against one log.
//
// Log indices and signature levels are 0-based throughout the library; the
// CLI prints 1-based indices.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "athena/signature_gen.hpp"
#include "athena/traffic_model.hpp"

namespace athena {

/// True iff base(p1) = base(q1), base(p2) = base(q2) and
/// |(p2.t - p1.t) - (q2.t - q1.t)| <= delta.
bool delta_valid(const TimedPacket& p1, const TimedPacket& p2, const TimedPacket& q1,
                 const TimedPacket& q2, double delta_us,
                 PayloadPolicy policy = PayloadPolicy::Ignore);

/// Strictly increasing log positions, one per signature packet.
struct Match {
  std::vector<std::size_t> indices;

  std::size_t first() const { return indices.front(); }
  std::size_t last() const { return indices.back(); }
  friend auto operator<=>(const Match&, const Match&) = default;
  friend bool operator==(const Match&, const Match&) = default;
};

struct MatchVertex {
  std::size_t log_index = 0;
  std::size_t level = 0;
  friend auto operator<=>(const MatchVertex&, const MatchVertex&) = default;
};

/// Directed edge from a level-j vertex to a level-(j-1) vertex.
struct MatchEdge {
  MatchVertex from;
  MatchVertex to;
  friend auto operator<=>(const MatchEdge&, const MatchEdge&) = default;
};

/// Layered DAG whose level-(n-1) to level-0 paths are exactly the
/// eps-valid matches. Vertex (i, j) exists iff some eps-valid match of the
/// first j+1 signature packets ends at log packet i. Immutable once built.
class MatchDag {
 public:
  struct Node {
    std::uint32_t log_index;
    std::vector<std::uint32_t> preds;  // positions in the level below, ascending
    std::vector<std::uint32_t> succs;  // positions in the level above, ascending
    bool completes = false;            // some path reaches the top level
  };

  MatchDag() = default;

  std::size_t log_size() const { return log_size_; }
  std::size_t signature_size() const { return levels_.size(); }
  std::size_t vertex_count() const;
  std::size_t edge_count() const;
  bool has_match() const { return !levels_.empty() && !levels_.back().empty(); }

  /// Nodes of one level ordered by log index.
  const std::vector<Node>& level(std::size_t j) const { return levels_[j]; }

  std::vector<MatchVertex> vertices() const;
  std::vector<MatchEdge> edges() const;

 private:
  friend MatchDag sig_match(std::span<const TimedPacket>, const Signature&,
                            const ToleranceVector&, PayloadPolicy);
  std::size_t log_size_ = 0;
  std::vector<std::vector<Node>> levels_;
};

/// Builds the match DAG. Predecessors of log packet i at level j are looked
/// up by binary search inside [t_i - tau - eps, t_i - tau + eps].
/// Errors: DimensionMismatch when eps has not n-1 entries.
MatchDag sig_match(const TrafficLog& log, const Signature& signature,
                   const ToleranceVector& eps,
                   PayloadPolicy policy = PayloadPolicy::Ignore);

/// Same, over any contiguous run of a log (timestamps strictly increasing).
/// Vertex log indices are positions within `packets`.
MatchDag sig_match(std::span<const TimedPacket> packets, const Signature& signature,
                   const ToleranceVector& eps,
                   PayloadPolicy policy = PayloadPolicy::Ignore);

struct MatchList {
  std::vector<Match> matches;  // lexicographically sorted
  bool truncated = false;      // more than `limit` matches exist
};

inline constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();

/// The lexicographically first `limit` matches (limit >= 1).
MatchList enumerate_matches(const MatchDag& dag, std::size_t limit);

/// Lexicographically smallest match, found greedily over vertices that can
/// still complete. O(|V| + |E|).
std::optional<Match> earliest_match(const MatchDag& dag);

/// Repeatedly takes the earliest match and removes only its packets.
/// Returned matches are pairwise disjoint, in the order found.
std::vector<Match> nonoverlapping_matches(const TrafficLog& log, const Signature& signature,
                                          const ToleranceVector& eps,
                                          PayloadPolicy policy = PayloadPolicy::Ignore);

}  // namespace athena
