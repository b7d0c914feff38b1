#include <cmath>
#include <numbers>

#include "doctest.h"
#include "igpmc/numerics.hpp"

using namespace igpmc;
using numerics::Matrix;
using numerics::Vector;

namespace {

double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

}  // namespace

TEST_CASE("spd_solve on identity and scaled identity") {
  Vector b(3);
  b << 1, 2, 3;
  CHECK((numerics::spd_solve(Matrix::Identity(3, 3), b) - b).norm() == doctest::Approx(0.0));
  Vector b2(2);
  b2 << 4, 6;
  const Vector x = numerics::spd_solve(2.0 * Matrix::Identity(2, 2), b2);
  CHECK(x[0] == doctest::Approx(2.0));
  CHECK(x[1] == doctest::Approx(3.0));
}

TEST_CASE("spd_solve matches closed-form 2x2 inverse") {
  Matrix a(2, 2);
  a << 4, 1, 1, 3;
  Vector b(2);
  b << 1, 2;
  const double det = 4.0 * 3.0 - 1.0;
  const double x0 = (3.0 * 1.0 - 1.0 * 2.0) / det;
  const double x1 = (-1.0 * 1.0 + 4.0 * 2.0) / det;
  const Vector x = numerics::spd_solve(a, b);
  CHECK(x[0] == doctest::Approx(x0).epsilon(1e-14));
  CHECK(x[1] == doctest::Approx(x1).epsilon(1e-14));
}

TEST_CASE("spd_solve recovers b for random SPD systems up to n=200") {
  numerics::RngStream rng(7, 0);
  for (Eigen::Index n : {1, 5, 40, 200}) {
    Matrix g(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) g(i, j) = rng.normal();
    const Matrix a = g.transpose() * g + Matrix::Identity(n, n);
    Vector b(n);
    for (Eigen::Index i = 0; i < n; ++i) b[i] = rng.normal();
    const Vector x = numerics::spd_solve(a, b);
    CHECK((a * x - b).norm() <= 1e-8 * b.norm());
  }
}

TEST_CASE("jitter ladder rescues a singular matrix and fails on an indefinite one") {
  Matrix a = Matrix::Ones(3, 3);
  numerics::SpdFactor f(a);
  CHECK(f.jitter_level() >= numerics::kJitterStart);
  CHECK(f.jitter_level() <= numerics::kJitterMax);

  Matrix neg = -Matrix::Identity(2, 2);
  neg(0, 0) = 1.0;
  CHECK_THROWS_AS(numerics::SpdFactor{neg}, Error);
  try {
    numerics::SpdFactor bad(neg);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNotPositiveDefinite);
  }
}

TEST_CASE("rng streams are reproducible and distinct") {
  numerics::RngStream a(42, 3);
  numerics::RngStream b(42, 3);
  numerics::RngStream c(42, 4);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.normal();
    CHECK(x == b.normal());
    if (x != c.normal()) differs = true;
  }
  CHECK(differs);
  CHECK(a.split(1).uniform() == b.split(1).uniform());
}

TEST_CASE("mvn_sample with zero covariance returns the mean") {
  numerics::RngStream rng(1, 0);
  Vector m(1);
  m << 5.0;
  const Vector x = numerics::mvn_sample(m, Matrix::Zero(1, 1), rng);
  CHECK(x[0] == 5.0);
}

TEST_CASE("mvn_sample moments") {
  numerics::RngStream rng(2, 0);
  const int n = 100000;
  Vector sum = Vector::Zero(2);
  Matrix sq = Matrix::Zero(2, 2);
  for (int i = 0; i < n; ++i) {
    const Vector x = numerics::mvn_sample(Vector::Zero(2), Matrix::Identity(2, 2), rng);
    sum += x;
    sq += x * x.transpose();
  }
  const Vector mu = sum / n;
  const Matrix cov = sq / n - mu * mu.transpose();
  CHECK(mu.cwiseAbs().maxCoeff() < 0.02);
  CHECK((cov - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 0.05);

  Vector mean(2);
  mean << 1, 1;
  Matrix c = Matrix::Zero(2, 2);
  c(0, 0) = 4;
  c(1, 1) = 9;
  std::vector<double> x0, x1;
  for (int i = 0; i < n; ++i) {
    const Vector x = numerics::mvn_sample(mean, c, rng);
    x0.push_back(x[0]);
    x1.push_back(x[1]);
  }
  CHECK(numerics::stddev(x0) == doctest::Approx(2.0).epsilon(0.03));
  CHECK(numerics::stddev(x1) == doctest::Approx(3.0).epsilon(0.03));
}

TEST_CASE("mvn_sample is a pure function of the stream state") {
  Matrix c(2, 2);
  c << 2, 0.5, 0.5, 1;
  numerics::RngStream r1(9, 1);
  numerics::RngStream r2(9, 1);
  const Vector a = numerics::mvn_sample(Vector::Zero(2), c, r1);
  const Vector b = numerics::mvn_sample(Vector::Zero(2), c, r2);
  CHECK(a == b);
}

TEST_CASE("rmse") {
  Vector a(2), b(2);
  a << 0, 0;
  b << 3, 4;
  CHECK(numerics::rmse(a, a) == 0.0);
  CHECK(numerics::rmse(a, b) == doctest::Approx(std::sqrt(12.5)));
  Vector c(3), d(3);
  c << 1, 2, 3;
  d << 2, 2, 2;
  CHECK(numerics::rmse(c, d) == doctest::Approx(std::sqrt(2.0 / 3.0)));
  CHECK_THROWS_AS(numerics::rmse(Vector{}, Vector{}), Error);
}

TEST_CASE("summary statistics") {
  const std::vector<double> x{1, 2, 3, 4};
  CHECK(numerics::mean(x) == 2.5);
  CHECK(numerics::stddev(x) == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(numerics::median(x) == 2.5);
  CHECK(numerics::median({5, 1, 3}) == 3.0);
}

TEST_CASE("kde point values") {
  CHECK(numerics::kde_eval({{0.0}, 1.0}, 0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)));
  CHECK(numerics::kde_eval({{-1.0, 1.0}, 1.0}, 0.0) == doctest::Approx(phi(1.0)));
  CHECK_THROWS_AS(numerics::make_kde({2.0, 2.0, 2.0}), Error);
  numerics::RngStream rng(3, 0);
  std::vector<double> s;
  for (int i = 0; i < 100; ++i) s.push_back(rng.normal());
  CHECK(numerics::kde_eval(numerics::make_kde(s), 0.0) == doctest::Approx(0.3989).epsilon(0.2));
}

TEST_CASE("kde integrates to one") {
  numerics::RngStream rng(4, 0);
  std::vector<double> s;
  for (int i = 0; i < 200; ++i) s.push_back(rng.normal() * (i % 2 ? 1.0 : 0.2) + (i % 3));
  const auto k = numerics::make_kde(s);
  const auto [mn, mx] = std::minmax_element(s.begin(), s.end());
  const double lo = *mn - 6 * k.bandwidth;
  const double hi = *mx + 6 * k.bandwidth;
  const auto n = static_cast<std::size_t>((hi - lo) / (k.bandwidth / 10)) + 1;
  const auto g = numerics::kde_grid(k, lo, hi, n);
  const double step = (hi - lo) / static_cast<double>(n - 1);
  double area = 0.0;
  for (std::size_t i = 1; i < n; ++i) area += 0.5 * (g[i] + g[i - 1]) * step;
  CHECK(area == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("ks distance") {
  CHECK(numerics::ks_distance({1, 2, 3}, {1, 2, 3}) == 0.0);
  CHECK(numerics::ks_distance({0, 0}, {1, 1}) == 1.0);
  CHECK(numerics::ks_distance({1, 2}, {2, 3}) == doctest::Approx(0.5));
  const double d = numerics::ks_distance_to_cdf({0.25, 0.75}, [](double x) { return std::clamp(x, 0.0, 1.0); });
  CHECK(d == doctest::Approx(0.25));
}

TEST_CASE("parallel_for visits each index once and reports the lowest failure") {
  std::vector<int> hits(50, 0);
  numerics::parallel_for(50, 4, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
  CHECK_THROWS_WITH(numerics::parallel_for(20, 3,
                                           [](std::size_t i) {
                                             if (i == 7 || i == 13) throw std::runtime_error(std::to_string(i));
                                           }),
                    "7");
}
