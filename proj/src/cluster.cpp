#include "igpmc/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace igpmc::cluster {

std::vector<std::size_t> ClusterAssignment::members(int group) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == group) out.push_back(i);
  }
  return out;
}

ClusterAssignment agglomerative_cluster(const numerics::Matrix& points, std::size_t groups,
                                        const numerics::Vector& scaling) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (groups < 1 || n < groups) {
    throw Error(ErrorCode::kTooFewPoints, "need at least " + std::to_string(groups) +
                                              " points, got " + std::to_string(n));
  }
  if (scaling.size() != points.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "scaling length does not match point dimension");
  }
  if ((scaling.array() <= 0.0).any()) {
    throw Error(ErrorCode::kInvalidConfig, "scaling must be positive");
  }

  // Column-major copy of the scaled points so each pair distance streams over columns.
  const numerics::Matrix scaled =
      (points.array().rowwise() / scaling.transpose().array()).matrix().transpose();
  numerics::Matrix dist(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    dist(i, i) = 0.0;
    const double* xi = scaled.col(static_cast<Eigen::Index>(i)).data();
    for (std::size_t j = i + 1; j < n; ++j) {
      const double* xj = scaled.col(static_cast<Eigen::Index>(j)).data();
      double acc = 0.0;
      for (Eigen::Index c = 0; c < scaled.rows(); ++c) acc += (xi[c] - xj[c]) * (xi[c] - xj[c]);
      const double d = std::sqrt(acc);
      dist(i, j) = d;
      dist(j, i) = d;
    }
  }

  // Nearest-neighbour chain. Average linkage is reducible, so the merges it
  // finds, replayed in order of height, give the same hierarchy as repeatedly
  // merging the globally closest pair. A cluster lives in the slot of one of
  // its points; Lance-Williams: d(k, i+j) = (n_i d(k,i) + n_j d(k,j)) / (n_i + n_j).
  struct Merge {
    double height;
    std::size_t a;
    std::size_t b;
  };
  std::vector<Merge> merges;
  merges.reserve(n - 1);
  std::vector<std::size_t> size(n, 1);
  std::vector<bool> active(n, true);
  std::vector<std::size_t> chain;
  chain.reserve(n);
  std::size_t remaining = n;
  while (remaining > 1) {
    if (chain.empty()) {
      std::size_t first = 0;
      while (!active[first]) ++first;
      chain.push_back(first);
    }
    const std::size_t a = chain.back();
    const std::size_t prev = chain.size() > 1 ? chain[chain.size() - 2] : n;
    const double* col = dist.col(static_cast<Eigen::Index>(a)).data();
    std::size_t b = prev;
    double best = prev < n ? col[prev] : std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == a || !active[j]) continue;
      if (col[j] < best || (col[j] == best && j < b && b != prev)) {
        best = col[j];
        b = j;
      }
    }
    if (b != prev) {
      chain.push_back(b);
      continue;
    }
    chain.pop_back();
    chain.pop_back();
    const std::size_t keep = std::min(a, b);
    const std::size_t drop = std::max(a, b);
    merges.push_back({best, keep, drop});
    const double wk = static_cast<double>(size[keep]);
    const double wd = static_cast<double>(size[drop]);
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == keep || k == drop) continue;
      const double d = (wk * dist(k, keep) + wd * dist(k, drop)) / (wk + wd);
      dist(k, keep) = d;
      dist(keep, k) = d;
    }
    size[keep] += size[drop];
    active[drop] = false;
    --remaining;
  }

  std::stable_sort(merges.begin(), merges.end(),
                   [](const Merge& x, const Merge& y) { return x.height < y.height; });
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t m = 0; m + groups < n; ++m) {
    const std::size_t ra = find(merges[m].a);
    const std::size_t rb = find(merges[m].b);
    parent[std::max(ra, rb)] = std::min(ra, rb);
  }
  std::vector<std::size_t> owner(n);
  for (std::size_t i = 0; i < n; ++i) owner[i] = find(i);

  ClusterAssignment out;
  out.labels.assign(n, -1);
  std::vector<int> id_of(n, -1);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = owner[i];
    if (id_of[root] < 0) id_of[root] = next++;
    out.labels[i] = id_of[root];
  }
  out.group_sizes.assign(static_cast<std::size_t>(next), 0);
  for (int l : out.labels) ++out.group_sizes[static_cast<std::size_t>(l)];
  return out;
}

void attach_scores(ClusterAssignment& a, const std::vector<double>& d_values) {
  if (d_values.size() != a.labels.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "one D value per clustered point required");
  }
  a.group_mean_D.assign(a.group_count(), 0.0);
  for (std::size_t i = 0; i < d_values.size(); ++i) {
    a.group_mean_D[static_cast<std::size_t>(a.labels[i])] += d_values[i];
  }
  for (std::size_t g = 0; g < a.group_count(); ++g) {
    a.group_mean_D[g] /= static_cast<double>(a.group_sizes[g]);
  }
}

std::vector<int> prune_groups(const ClusterAssignment& a, std::size_t min_size,
                              const std::vector<double>& d_values, PruneRule rule) {
  ClusterAssignment scored = a;
  attach_scores(scored, d_values);
  const std::size_t g = scored.group_count();
  const double med = numerics::median(scored.group_mean_D);

  std::vector<int> kept;
  for (std::size_t i = 0; i < g; ++i) {
    const bool big = scored.group_sizes[i] >= std::max<std::size_t>(min_size, 1);
    const bool good = rule == PruneRule::kSizeOnly || scored.group_mean_D[i] <= med;
    if (big && good) kept.push_back(static_cast<int>(i));
  }
  if (kept.empty()) {
    const auto best = std::min_element(scored.group_mean_D.begin(), scored.group_mean_D.end());
    kept.push_back(static_cast<int>(best - scored.group_mean_D.begin()));
  }
  return kept;
}

}  // namespace igpmc::cluster
