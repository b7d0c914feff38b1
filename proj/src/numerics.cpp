#include "igpmc/numerics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numbers>
#include <thread>

namespace igpmc::numerics {

namespace {

std::mt19937_64 seeded_engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x9e3779b9u};
  return std::mt19937_64(seq);
}

void require_same_length(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(ErrorCode::kDimensionMismatch,
                "lengths " + std::to_string(a) + " and " + std::to_string(b) + " differ");
  }
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(seeded_engine(seed, stream)) {}

double RngStream::normal() { return normal_(engine_); }

double RngStream::uniform() { return std::generate_canonical<double, 53>(engine_); }

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::size_t RngStream::index(std::size_t n) {
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

RngStream RngStream::split(std::uint64_t id) const {
  // splitmix64 scramble of the child id keeps nearby ids decorrelated.
  std::uint64_t z = stream_ + 0x9e3779b97f4a7c15ULL * (id + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return RngStream(seed_, z);
}

SpdFactor::SpdFactor(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "matrix is not square");
  }
  if (!a.allFinite()) {
    throw Error(ErrorCode::kNotPositiveDefinite, "matrix has non-finite entries");
  }
  llt_.compute(a);
  if (llt_.info() == Eigen::Success) {
    return;
  }
  const double n = static_cast<double>(std::max<Eigen::Index>(a.rows(), 1));
  const double scale = std::max(a.trace() / n, std::numeric_limits<double>::min());
  for (double delta = kJitterStart; delta <= kJitterMax * (1.0 + 1e-9); delta *= 10.0) {
    Matrix jittered = a;
    jittered.diagonal().array() += delta * scale;
    llt_.compute(jittered);
    if (llt_.info() == Eigen::Success) {
      jitter_ = delta * scale;
      jitter_level_ = delta;
      return;
    }
  }
  throw Error(ErrorCode::kNotPositiveDefinite, "jitter ladder exhausted at 1e-4");
}

Vector SpdFactor::solve(const Vector& b) const {
  if (b.size() != llt_.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "right-hand side length does not match matrix");
  }
  return llt_.solve(b);
}

Matrix SpdFactor::solve(const Matrix& b) const {
  if (b.rows() != llt_.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "right-hand side rows do not match matrix");
  }
  return llt_.solve(b);
}

Vector SpdFactor::solve_lower(const Vector& b) const {
  return llt_.matrixL().solve(b);
}

bool is_symmetric(const Matrix& a, double rel_tol) {
  if (a.rows() != a.cols()) {
    return false;
  }
  const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-300);
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

Vector spd_solve(const Matrix& a, const Vector& b) {
  if (a.rows() != a.cols() || a.rows() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "spd_solve: A must be square with dim(A) == len(b)");
  }
  return SpdFactor(a).solve(b);
}

Vector mvn_sample(const Vector& mean, const Matrix& cov, RngStream& rng) {
  if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "mvn_sample: covariance does not match mean");
  }
  if (cov.isDiagonal(0.0)) {
    return mvn_sample_diag(mean, cov.diagonal(), rng);
  }
  const SpdFactor factor(cov);
  Vector z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    z[i] = rng.normal();
  }
  return mean + factor.lower() * z;
}

Vector mvn_sample_diag(const Vector& mean, const Vector& variances, RngStream& rng) {
  if (variances.size() != mean.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "mvn_sample: variances do not match mean");
  }
  Vector out = mean;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (variances[i] < 0.0) {
      throw Error(ErrorCode::kNotPositiveDefinite, "negative variance on diagonal");
    }
    const double z = rng.normal();
    if (variances[i] > 0.0) {
      out[i] += std::sqrt(variances[i]) * z;
    }
  }
  return out;
}

double rmse(std::span<const double> a, std::span<const double> b) {
  require_same_length(a.size(), b.size());
  if (a.empty()) {
    throw Error(ErrorCode::kEmptyInput, "rmse of empty vectors");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double r = a[i] - b[i];
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(a.size()));
}

double rmse(const Vector& a, const Vector& b) {
  return rmse(std::span<const double>(a.data(), static_cast<std::size_t>(a.size())),
              std::span<const double>(b.data(), static_cast<std::size_t>(b.size())));
}

double mean(std::span<const double> x) {
  if (x.empty()) {
    throw Error(ErrorCode::kEmptyInput, "mean of empty sample");
  }
  double acc = 0.0;
  for (double v : x) acc += v;
  return acc / static_cast<double>(x.size());
}

double stddev(std::span<const double> x) {
  if (x.size() < 2) {
    return 0.0;
  }
  const double m = mean(x);
  double acc = 0.0;
  for (double v : x) acc += (v - m) * (v - m);
  return std::sqrt(acc / static_cast<double>(x.size() - 1));
}

double median(std::vector<double> x) { return quantile(std::move(x), 0.5); }

double quantile(std::vector<double> x, double p) {
  if (x.empty()) {
    throw Error(ErrorCode::kEmptyInput, "quantile of empty sample");
  }
  std::sort(x.begin(), x.end());
  const double pos = std::clamp(p, 0.0, 1.0) * static_cast<double>(x.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, x.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * x[lo] + w * x[hi];
}

double silverman_bandwidth(std::span<const double> samples) {
  if (samples.empty()) {
    throw Error(ErrorCode::kEmptyInput, "bandwidth of empty sample");
  }
  const double sd = stddev(samples);
  if (!(sd > 0.0)) {
    throw Error(ErrorCode::kZeroBandwidth, "all samples identical (degenerate posterior)");
  }
  return 1.06 * sd * std::pow(static_cast<double>(samples.size()), -0.2);
}

Kde1d make_kde(std::vector<double> samples) {
  const double h = silverman_bandwidth(samples);
  return Kde1d{std::move(samples), h};
}

double kde_eval(const Kde1d& k, double x) {
  if (!(k.bandwidth > 0.0)) {
    throw Error(ErrorCode::kZeroBandwidth, "bandwidth must be positive");
  }
  if (k.samples.empty()) {
    throw Error(ErrorCode::kEmptyInput, "kde has no samples");
  }
  const double norm = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * k.bandwidth);
  double acc = 0.0;
  for (double s : k.samples) {
    const double u = (x - s) / k.bandwidth;
    acc += std::exp(-0.5 * u * u);
  }
  return norm * acc / static_cast<double>(k.samples.size());
}

std::vector<double> kde_grid(const Kde1d& k, double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = n > 1 ? lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1) : lo;
    out[i] = kde_eval(k, x);
  }
  return out;
}

double kde_mode(const Kde1d& k, std::size_t grid_points) {
  const auto [mn, mx] = std::minmax_element(k.samples.begin(), k.samples.end());
  const double lo = *mn;
  const double hi = *mx;
  double best_x = lo;
  double best = -1.0;
  for (std::size_t i = 0; i < grid_points; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid_points - 1);
    const double v = kde_eval(k, x);
    if (v > best) {
      best = v;
      best_x = x;
    }
  }
  return best_x;
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) {
    throw Error(ErrorCode::kEmptyInput, "ks_distance of empty sample");
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double worst = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    worst = std::max(worst, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return worst;
}

double ks_distance_to_cdf(std::vector<double> a, const std::function<double(double)>& cdf) {
  if (a.empty()) {
    throw Error(ErrorCode::kEmptyInput, "ks_distance of empty sample");
  }
  std::sort(a.begin(), a.end());
  const double n = static_cast<double>(a.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double f = cdf(a[i]);
    worst = std::max({worst, std::abs(static_cast<double>(i + 1) / n - f),
                      std::abs(f - static_cast<double>(i) / n)});
  }
  return worst;
}

std::size_t default_thread_count() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body) {
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  // Failures are kept per index so the lowest failing index is reported
  // regardless of scheduling.
  std::vector<std::exception_ptr> failures(n);
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            body(i);
          } catch (...) {
            failures[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
}

}  // namespace igpmc::numerics
