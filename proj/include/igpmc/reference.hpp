#pragma once

// Brute-force reference implementations. They favour transparency over speed
// and back the self-test command, the unit tests and the acceptance checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "igpmc/gp.hpp"
#include "igpmc/numerics.hpp"

namespace igpmc::reference {

using numerics::Matrix;
using numerics::Vector;

struct GpPrediction {
  Vector mean;
  Vector variance;
};

/// Forms C_BB densely, inverts it outright and applies the conditioning
/// formulas term by term.
inline GpPrediction dense_gp(const Matrix& inputs, const Matrix& targets, const Vector& alpha,
                             double jitter, const Vector& query) {
  const Eigen::Index k = inputs.rows();
  auto corr = [&](const Vector& a, const Vector& b) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < alpha.size(); ++i) s += alpha[i] * (a[i] - b[i]) * (a[i] - b[i]);
    return std::exp(-s);
  };
  Matrix r(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) {
      r(a, b) = corr(inputs.row(a).transpose(), inputs.row(b).transpose());
    }
    r(a, a) += jitter;
  }
  const Matrix r_inv = r.fullPivLu().inverse();
  Vector c(k);
  for (Eigen::Index a = 0; a < k; ++a) c[a] = corr(query, inputs.row(a).transpose());

  GpPrediction out;
  out.mean.resize(targets.cols());
  out.variance.resize(targets.cols());
  for (Eigen::Index j = 0; j < targets.cols(); ++j) {
    const double mu = targets.col(j).mean();
    const Vector centered = targets.col(j).array() - mu;
    const double var = centered.squaredNorm() / static_cast<double>(k - 1);
    out.mean[j] = mu + c.dot(r_inv * centered);
    out.variance[j] = std::max(0.0, var * (1.0 - c.dot(r_inv * c)));
  }
  return out;
}

struct GpProblem {
  Matrix inputs;
  Matrix targets;
  Vector query;
  gp::KernelConfig kernel;
};

/// Random inverse-GP problem with K in [2, 30], n_d in [1, 20], n_m in
/// [1, 10] and an auto-tuned kernel. Draws whose correlation matrix has a
/// condition number above `max_condition` are redrawn, since there the dense
/// inverse carries errors of order cond * eps and is no longer a reference;
/// `rejected` counts them.
inline GpProblem random_gp_problem(numerics::RngStream& rng, double max_condition,
                                   int& rejected) {
  for (;;) {
    const auto k = static_cast<Eigen::Index>(2 + rng.index(29));
    const auto nd = static_cast<Eigen::Index>(1 + rng.index(20));
    const auto nm = static_cast<Eigen::Index>(1 + rng.index(10));
    GpProblem p{Matrix(k, nd), Matrix(k, nm), Vector(nd), {}};
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = 0; j < nd; ++j) p.inputs(i, j) = rng.normal() * (1.0 + static_cast<double>(j));
      for (Eigen::Index j = 0; j < nm; ++j) p.targets(i, j) = rng.uniform(-1.0, 1.0);
    }
    for (Eigen::Index j = 0; j < nd; ++j) p.query[j] = rng.normal() * (1.0 + static_cast<double>(j));
    p.kernel = gp::auto_tune(p.inputs);
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(gp::correlation_matrix(p.kernel, p.inputs),
                                                    Eigen::EigenvaluesOnly);
    const Vector ev = eig.eigenvalues();
    if (ev[0] > 0.0 && ev[ev.size() - 1] / ev[0] <= max_condition) return p;
    ++rejected;
  }
}

/// O(n^3) average linkage: repeatedly merge the lexicographically first pair
/// of clusters with the smallest mean pairwise point distance.
inline std::vector<int> brute_force_average_linkage(const Matrix& points, std::size_t groups) {
  const auto n = static_cast<std::size_t>(points.rows());
  std::vector<std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < n; ++i) clusters.push_back({i});
  auto dist = [&](std::size_t a, std::size_t b) {
    return (points.row(static_cast<Eigen::Index>(a)) - points.row(static_cast<Eigen::Index>(b))).norm();
  };
  while (clusters.size() > groups) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0;
    std::size_t bj = 0;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        double s = 0.0;
        for (auto a : clusters[i])
          for (auto b : clusters[j]) s += dist(a, b);
        s /= static_cast<double>(clusters[i].size() * clusters[j].size());
        if (s < best) {
          best = s;
          bi = i;
          bj = j;
        }
      }
    }
    clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
  }
  // Label groups by their lowest member index.
  std::sort(clusters.begin(), clusters.end(), [](const auto& a, const auto& b) {
    return *std::min_element(a.begin(), a.end()) < *std::min_element(b.begin(), b.end());
  });
  std::vector<int> labels(n, -1);
  for (std::size_t g = 0; g < clusters.size(); ++g)
    for (auto i : clusters[g]) labels[i] = static_cast<int>(g);
  return labels;
}

/// CDF of a 1-D density tabulated by trapezoid quadrature on `points` nodes.
class GridPosterior {
 public:
  GridPosterior(const std::function<double(double)>& log_density, double lo, double hi, std::size_t points)
      : lo_(lo), hi_(hi), x_(points), cdf_(points) {
    std::vector<double> logs(points);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points; ++i) {
      x_[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
      logs[i] = log_density(x_[i]);
      top = std::max(top, logs[i]);
    }
    cdf_[0] = 0.0;
    for (std::size_t i = 1; i < points; ++i) {
      const double a = std::exp(logs[i - 1] - top);
      const double b = std::exp(logs[i] - top);
      cdf_[i] = cdf_[i - 1] + 0.5 * (a + b) * (x_[i] - x_[i - 1]);
    }
    for (auto& c : cdf_) c /= cdf_.back();
  }

  [[nodiscard]] double cdf(double x) const {
    if (x <= lo_) return 0.0;
    if (x >= hi_) return 1.0;
    const double t = (x - lo_) / (hi_ - lo_) * static_cast<double>(x_.size() - 1);
    const auto i = std::min(static_cast<std::size_t>(t), x_.size() - 2);
    const double w = t - static_cast<double>(i);
    return cdf_[i] * (1.0 - w) + cdf_[i + 1] * w;
  }

 private:
  double lo_;
  double hi_;
  std::vector<double> x_;
  std::vector<double> cdf_;
};

}  // namespace igpmc::reference
