#include <algorithm>
#include <map>
#include <numeric>

#include "doctest.h"
#include "igpmc/cluster.hpp"
#include "igpmc/reference.hpp"

using namespace igpmc;
using numerics::Matrix;
using numerics::Vector;

namespace {

// Canonical form of a partition: members sorted, groups sorted by first member.
std::vector<std::vector<std::size_t>> partition(const std::vector<int>& labels) {
  std::map<int, std::vector<std::size_t>> by;
  for (std::size_t i = 0; i < labels.size(); ++i) by[labels[i]].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  for (auto& [k, v] : by) out.push_back(v);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("average linkage matches the brute-force oracle") {
  numerics::RngStream rng(21, 0);
  for (int trial = 0; trial < 30; ++trial) {
    const auto n = static_cast<Eigen::Index>(5 + rng.index(40));
    const auto dim = static_cast<Eigen::Index>(1 + rng.index(4));
    Matrix x(n, dim);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < dim; ++j) x(i, j) = rng.normal() + (i % 3) * 4.0;
    Vector scale(dim);
    for (Eigen::Index j = 0; j < dim; ++j) scale[j] = 0.5 + rng.uniform();
    const auto g = 1 + rng.index(std::min<std::size_t>(6, static_cast<std::size_t>(n)));
    const auto got = cluster::agglomerative_cluster(x, g, scale);
    const Matrix scaled = (x.array().rowwise() / scale.transpose().array()).matrix();
    const auto want = reference::brute_force_average_linkage(scaled, g);
    CHECK(got.labels == want);
    CHECK(got.group_count() == g);
  }
}

TEST_CASE("well separated blobs are recovered") {
  Matrix x(9, 2);
  x << 0, 0, 0.1, 0, 0, 0.1, 10, 10, 10.1, 10, 10, 10.1, -10, 5, -10.1, 5, -10, 5.1;
  const auto a = cluster::agglomerative_cluster(x, 3, Vector::Ones(2));
  CHECK(a.labels == std::vector<int>{0, 0, 0, 1, 1, 1, 2, 2, 2});
  CHECK(a.group_sizes == std::vector<std::size_t>{3, 3, 3});
  CHECK(a.members(1) == std::vector<std::size_t>{3, 4, 5});
}

TEST_CASE("scaling changes which dimension dominates") {
  Matrix x(4, 2);
  x << 0, 0, 0, 10, 1, 0, 1, 10;
  CHECK(partition(cluster::agglomerative_cluster(x, 2, Vector::Ones(2)).labels) ==
        std::vector<std::vector<std::size_t>>{{0, 2}, {1, 3}});
  Vector s(2);
  s << 0.01, 100.0;
  CHECK(partition(cluster::agglomerative_cluster(x, 2, s).labels) ==
        std::vector<std::vector<std::size_t>>{{0, 1}, {2, 3}});
}

TEST_CASE("partition is invariant to point order") {
  numerics::RngStream rng(22, 0);
  Matrix x(30, 3);
  for (Eigen::Index i = 0; i < 30; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) x(i, j) = rng.normal() + (i % 4) * 3.0;
  std::vector<std::size_t> perm(30);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng.engine());
  Matrix y(30, 3);
  for (std::size_t i = 0; i < 30; ++i) y.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(perm[i]));
  const auto a = cluster::agglomerative_cluster(x, 4, Vector::Ones(3));
  const auto b = cluster::agglomerative_cluster(y, 4, Vector::Ones(3));
  std::vector<int> mapped(30);
  for (std::size_t i = 0; i < 30; ++i) mapped[perm[i]] = b.labels[i];
  CHECK(partition(a.labels) == partition(mapped));
}

TEST_CASE("every point gets exactly one label") {
  numerics::RngStream rng(23, 0);
  Matrix x(50, 2);
  for (Eigen::Index i = 0; i < 50; ++i) x.row(i) << rng.normal(), rng.normal();
  for (std::size_t g : {1u, 2u, 7u, 50u}) {
    const auto a = cluster::agglomerative_cluster(x, g, Vector::Ones(2));
    CHECK(a.labels.size() == 50);
    CHECK(std::accumulate(a.group_sizes.begin(), a.group_sizes.end(), std::size_t{0}) == 50);
    CHECK(*std::max_element(a.labels.begin(), a.labels.end()) == static_cast<int>(g) - 1);
  }
}

TEST_CASE("invalid clustering requests are rejected") {
  const Matrix x = Matrix::Zero(3, 2);
  CHECK_THROWS_AS(cluster::agglomerative_cluster(x, 4, Vector::Ones(2)), Error);
  CHECK_THROWS_AS(cluster::agglomerative_cluster(x, 0, Vector::Ones(2)), Error);
  CHECK_THROWS_AS(cluster::agglomerative_cluster(x, 2, Vector::Ones(3)), Error);
  CHECK_THROWS_AS(cluster::agglomerative_cluster(x, 2, Vector::Zero(2)), Error);
}

TEST_CASE("pruning keeps large groups at or below the median score") {
  cluster::ClusterAssignment a;
  // Sizes 4, 4, 1, 3 with mean D 1, 5, 0.1, 2.
  a.labels = {0, 0, 0, 0, 1, 1, 1, 1, 2, 3, 3, 3};
  a.group_sizes = {4, 4, 1, 3};
  const std::vector<double> d{1, 1, 1, 1, 5, 5, 5, 5, 0.1, 2, 2, 2};
  // Median of the group means is 1.5.
  CHECK(cluster::prune_groups(a, 3, d) == std::vector<int>{0});
  CHECK(cluster::prune_groups(a, 1, d) == std::vector<int>{0, 2});
  CHECK(cluster::prune_groups(a, 3, d, cluster::PruneRule::kSizeOnly) == std::vector<int>{0, 1, 3});
  cluster::attach_scores(a, d);
  CHECK(a.group_mean_D == std::vector<double>{1, 5, 0.1, 2});
}

TEST_CASE("pruning never returns an empty set") {
  cluster::ClusterAssignment a;
  a.labels = {0, 1, 2};
  a.group_sizes = {1, 1, 1};
  CHECK(cluster::prune_groups(a, 30, {3.0, 1.0, 2.0}) == std::vector<int>{1});
}
