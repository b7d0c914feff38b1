#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "igpmc/error.hpp"

namespace igpmc::numerics {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Seedable random stream. Identical (seed, stream) pairs reproduce identical
/// draw sequences; distinct stream ids give independent sequences.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0, std::uint64_t stream = 0);

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] std::uint64_t stream() const noexcept { return stream_; }

  double normal();
  double uniform();  // [0, 1)
  double uniform(double lo, double hi);
  std::size_t index(std::size_t n);  // uniform on [0, n)

  /// A child stream whose sequence depends only on (seed, stream, id).
  [[nodiscard]] RngStream split(std::uint64_t id) const;

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Cholesky factor of a symmetric positive definite matrix. When plain
/// factorization fails, a diagonal jitter delta * trace(A)/n is added with
/// delta climbing 1e-10, 1e-9, ..., 1e-4.
class SpdFactor {
 public:
  explicit SpdFactor(const Matrix& a);

  [[nodiscard]] Vector solve(const Vector& b) const;
  [[nodiscard]] Matrix solve(const Matrix& b) const;
  /// Solves L x = b with the lower factor.
  [[nodiscard]] Vector solve_lower(const Vector& b) const;

  [[nodiscard]] Eigen::Index size() const { return llt_.rows(); }
  /// Absolute diagonal jitter that was added (0 when none was needed).
  [[nodiscard]] double jitter() const noexcept { return jitter_; }
  /// Relative jitter level delta (0 when none was needed).
  [[nodiscard]] double jitter_level() const noexcept { return jitter_level_; }
  [[nodiscard]] Matrix lower() const { return llt_.matrixL(); }

 private:
  Eigen::LLT<Matrix> llt_;
  double jitter_ = 0.0;
  double jitter_level_ = 0.0;
};

inline constexpr double kJitterStart = 1e-10;
inline constexpr double kJitterMax = 1e-4;

bool is_symmetric(const Matrix& a, double rel_tol = 1e-12);

Vector spd_solve(const Matrix& a, const Vector& b);

Vector mvn_sample(const Vector& mean, const Matrix& cov, RngStream& rng);
/// Fast path for a diagonal covariance given by its variances.
Vector mvn_sample_diag(const Vector& mean, const Vector& variances, RngStream& rng);

double rmse(std::span<const double> a, std::span<const double> b);
double rmse(const Vector& a, const Vector& b);

double mean(std::span<const double> x);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double stddev(std::span<const double> x);
double median(std::vector<double> x);
double quantile(std::vector<double> x, double p);

struct Kde1d {
  std::vector<double> samples;
  double bandwidth = 0.0;
};

/// 1.06 * sd * n^(-1/5); throws ZeroBandwidth when all samples coincide.
double silverman_bandwidth(std::span<const double> samples);
Kde1d make_kde(std::vector<double> samples);
double kde_eval(const Kde1d& k, double x);
/// Density on an evenly spaced grid of n points over [lo, hi].
std::vector<double> kde_grid(const Kde1d& k, double lo, double hi, std::size_t n);
/// Location of the highest KDE value over a fine grid spanning the samples.
double kde_mode(const Kde1d& k, std::size_t grid_points = 512);

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_distance(std::vector<double> a, std::vector<double> b);
/// One-sample KS statistic against a tabulated CDF (monotone in x).
double ks_distance_to_cdf(std::vector<double> a, const std::function<double(double)>& cdf);

/// Runs body(i) for i in [0, n) on up to `threads` workers. Each index runs
/// exactly once; callers write results into index-addressed slots.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body);
std::size_t default_thread_count();

}  // namespace igpmc::numerics
