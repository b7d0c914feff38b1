#pragma once

#include <vector>

#include "igpmc/numerics.hpp"

namespace igpmc::cluster {

struct ClusterAssignment {
  /// Group id per point, in 0..g-1. Groups are numbered by their lowest point index.
  std::vector<int> labels;
  std::vector<std::size_t> group_sizes;
  /// Mean weighted distance D per group; filled by attach_scores().
  std::vector<double> group_mean_D;

  [[nodiscard]] std::size_t group_count() const { return group_sizes.size(); }
  [[nodiscard]] std::vector<std::size_t> members(int group) const;
};

/// Average-linkage agglomerative clustering cut at `groups` clusters.
/// points: one row per point. Distances are Euclidean on coordinates divided
/// by `scaling` (per-dimension). With distinct distances the hierarchy equals
/// repeatedly merging the closest pair; exact ties are resolved along the
/// nearest-neighbour chain, preferring the chain predecessor, then the lowest index.
ClusterAssignment agglomerative_cluster(const numerics::Matrix& points, std::size_t groups,
                                        const numerics::Vector& scaling);

/// Fills group_mean_D from per-point scores.
void attach_scores(ClusterAssignment& a, const std::vector<double>& d_values);

enum class PruneRule {
  kMedian,    // size >= min_size and mean D <= median of the group means
  kSizeOnly,  // size >= min_size
};

/// Ids of groups kept, ascending. Never empty: the lowest-mean-D group always
/// survives.
std::vector<int> prune_groups(const ClusterAssignment& a, std::size_t min_size,
                              const std::vector<double>& d_values,
                              PruneRule rule = PruneRule::kMedian);

}  // namespace igpmc::cluster
