#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "igpmc/gp.hpp"
#include "igpmc/reference.hpp"

using namespace igpmc;
using gp::Matrix;
using gp::Vector;

namespace {

struct Problem {
  Matrix inputs;
  Matrix targets;
};

Problem random_problem(numerics::RngStream& rng, Eigen::Index k, Eigen::Index nd, Eigen::Index nm) {
  Problem p{Matrix(k, nd), Matrix(k, nm)};
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < nd; ++j) p.inputs(i, j) = rng.normal() * (1.0 + j);
    for (Eigen::Index j = 0; j < nm; ++j) p.targets(i, j) = rng.uniform(-1.0, 1.0);
  }
  return p;
}

}  // namespace

TEST_CASE("predict matches the dense direct-inverse oracle on random problems") {
  numerics::RngStream rng(11, 0);
  int rejected = 0;
  double worst_mean = 0.0;
  double worst_var = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = reference::random_gp_problem(rng, 1e5, rejected);
    const gp::InverseGpSurrogate s(p.inputs, p.targets, p.kernel);
    const auto got = s.predict(p.query);
    const auto want = reference::dense_gp(p.inputs, p.targets, p.kernel.alpha, s.jitter(), p.query);
    worst_mean = std::max(worst_mean, (got.mean - want.mean).cwiseAbs().maxCoeff());
    worst_var = std::max(worst_var, (got.variance - want.variance).cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < p.inputs.rows(); ++i) {
      const auto at = s.predict(p.inputs.row(i).transpose());
      CHECK((at.mean - p.targets.row(i).transpose()).cwiseAbs().maxCoeff() < 1e-8);
      CHECK(at.variance.maxCoeff() < 1e-8);
    }
    CHECK(((got.variance - s.process_variance()).array() <= 1e-12).all());
  }
  CHECK(worst_mean <= 1e-10);
  CHECK(worst_var <= 1e-10);
  CHECK(rejected < 100);
}

TEST_CASE("two-point problem matches the hand formula") {
  Matrix x(2, 1);
  x << 0.0, 1.0;
  Matrix y(2, 1);
  y << 1.0, 3.0;
  const auto cfg = gp::make_kernel(Vector::Constant(1, 1.0), 1.0);
  const gp::InverseGpSurrogate s(x, y, cfg);
  const double r = std::exp(-1.0);
  const double c0 = std::exp(-0.25);
  // At the midpoint both correlations equal c0; R^-1 1 = 1 / (1 + r).
  const auto p = s.predict(Vector::Constant(1, 0.5));
  CHECK(p.mean[0] == doctest::Approx(2.0));
  const double var = 2.0;  // sample variance of {1, 3}
  CHECK(p.variance[0] == doctest::Approx(var * (1.0 - 2.0 * c0 * c0 / (1.0 + r))).epsilon(1e-12));
  // Away from the middle the mean tilts toward the nearer point.
  const auto q = s.predict(Vector::Constant(1, 0.0));
  CHECK(q.mean[0] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("posterior mean interpolates base points and variance vanishes there") {
  numerics::RngStream rng(12, 0);
  const Problem p = random_problem(rng, 12, 4, 3);
  const gp::InverseGpSurrogate s(p.inputs, p.targets, gp::auto_tune(p.inputs));
  REQUIRE(s.jitter() == 0.0);
  for (Eigen::Index i = 0; i < p.inputs.rows(); ++i) {
    const auto pr = s.predict(p.inputs.row(i).transpose());
    CHECK((pr.mean - p.targets.row(i).transpose()).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(pr.variance.maxCoeff() < 1e-8);
  }
}

TEST_CASE("predictive variance never exceeds the process variance") {
  numerics::RngStream rng(13, 0);
  const Problem p = random_problem(rng, 20, 3, 2);
  const gp::InverseGpSurrogate s(p.inputs, p.targets, gp::auto_tune(p.inputs));
  for (int t = 0; t < 200; ++t) {
    Vector q(3);
    for (Eigen::Index j = 0; j < 3; ++j) q[j] = rng.normal() * 3.0;
    const auto pr = s.predict(q);
    for (Eigen::Index j = 0; j < 2; ++j) {
      CHECK(pr.variance[j] >= 0.0);
      CHECK(pr.variance[j] <= s.process_variance()[j] * (1.0 + 1e-12));
    }
  }
  // Far from every base point the prior is recovered.
  const auto far = s.predict(Vector::Constant(3, 1e3));
  CHECK((far.mean - s.mean_function()).norm() < 1e-12);
  CHECK((far.variance - s.process_variance()).norm() < 1e-12);
}

TEST_CASE("prediction is invariant to base point order") {
  numerics::RngStream rng(14, 0);
  const Problem p = random_problem(rng, 15, 5, 2);
  std::vector<int> perm(15);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::swap(perm[2], perm[9]);
  Matrix xi(15, 5);
  Matrix yi(15, 2);
  for (int i = 0; i < 15; ++i) {
    xi.row(i) = p.inputs.row(perm[static_cast<std::size_t>(i)]);
    yi.row(i) = p.targets.row(perm[static_cast<std::size_t>(i)]);
  }
  const auto cfg = gp::auto_tune(p.inputs);
  const gp::InverseGpSurrogate a(p.inputs, p.targets, cfg);
  const gp::InverseGpSurrogate b(xi, yi, cfg);
  for (int t = 0; t < 20; ++t) {
    Vector q(5);
    for (Eigen::Index j = 0; j < 5; ++j) q[j] = rng.normal() * (1.0 + j);
    const auto pa = a.predict(q);
    const auto pb = b.predict(q);
    CHECK((pa.mean - pb.mean).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((pa.variance - pb.variance).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("auto_tune hits the band midpoint; two points have a closed form") {
  Matrix x(2, 1);
  x << 0.0, 2.0;
  const auto cfg = gp::auto_tune(x);
  // sd = sqrt(2); corr = exp(-4 / (2 q^2)) = 0.85.
  const double q = std::sqrt(2.0 / -std::log(0.85));
  CHECK(cfg.q_scale == doctest::Approx(q).epsilon(1e-9));
  CHECK(cfg.band_reached);
  CHECK(cfg.mean_correlation == doctest::Approx(0.85).epsilon(1e-9));

  numerics::RngStream rng(15, 0);
  const Problem p = random_problem(rng, 40, 6, 1);
  const auto c6 = gp::auto_tune(p.inputs);
  CHECK(gp::mean_pairwise_correlation(c6, p.inputs) == doctest::Approx(0.85).epsilon(1e-8));
  CHECK(c6.mean_correlation >= 0.75);
  CHECK(c6.mean_correlation <= 0.95);
}

TEST_CASE("auto_tune clamps q and flags an unreachable band") {
  Matrix x(2, 1);
  x << 0.0, 2.0;
  gp::TuneOptions o;
  o.q_max = 0.5;
  const auto cfg = gp::auto_tune(x, o);
  CHECK_FALSE(cfg.band_reached);
  CHECK(cfg.q_scale == doctest::Approx(0.5));
}

TEST_CASE("constant input dimensions are excluded from the kernel") {
  Matrix x(4, 2);
  x << 0, 7, 1, 7, 2, 7, 3, 7;
  const auto cfg = gp::auto_tune(x);
  CHECK(cfg.alpha[1] == 0.0);
  CHECK(cfg.alpha[0] > 0.0);
  Vector a(2), b(2);
  a << 1.0, 7.0;
  b << 1.0, -100.0;
  CHECK(gp::correlation(cfg, a, b) == 1.0);
}

TEST_CASE("kernel evaluation") {
  const auto cfg = gp::make_kernel(Vector::Constant(2, 1.0), 2.0, 3.0);
  CHECK(cfg.alpha[0] == doctest::Approx(0.25));
  Vector a(2), b(2);
  a << 0, 0;
  b << 1, 1;
  CHECK(gp::kernel_eval(cfg, a, a) == doctest::Approx(3.0));
  CHECK(gp::kernel_eval(cfg, a, b) == doctest::Approx(3.0 * std::exp(-0.5)));
  const Matrix r = gp::correlation_matrix(cfg, (Matrix(2, 2) << 0, 0, 1, 1).finished());
  CHECK(r(0, 1) == doctest::Approx(std::exp(-0.5)));
  CHECK(r(0, 0) == 1.0);
}

TEST_CASE("dimension mismatches are rejected") {
  const auto cfg = gp::make_kernel(Vector::Constant(2, 1.0), 1.0);
  CHECK_THROWS_AS(gp::InverseGpSurrogate(Matrix::Zero(1, 2), Matrix::Zero(1, 1), cfg), Error);
  CHECK_THROWS_AS(gp::InverseGpSurrogate(Matrix::Zero(3, 3), Matrix::Zero(3, 1), cfg), Error);
  const gp::InverseGpSurrogate s((Matrix(2, 2) << 0, 0, 1, 1).finished(), Matrix::Zero(2, 1), cfg);
  CHECK_THROWS_AS((void)s.predict(Vector::Zero(3)), Error);
}

TEST_CASE("input-variance mode uses the mean output variance") {
  Matrix x(3, 1);
  x << 0, 1, 2;
  Matrix y(3, 1);
  y << 5, 5, 8;
  const auto cfg = gp::auto_tune(x);
  const gp::InverseGpSurrogate s(x, y, cfg, gp::ProcessVariance::kInputVariance);
  CHECK(s.process_variance()[0] == doctest::Approx(1.0));
  const gp::InverseGpSurrogate t(x, y, cfg);
  CHECK(t.process_variance()[0] == doctest::Approx(3.0));
}

TEST_CASE("surrogate survives a JSON round trip") {
  numerics::RngStream rng(16, 0);
  const Problem p = random_problem(rng, 10, 3, 2);
  const gp::InverseGpSurrogate s(p.inputs, p.targets, gp::auto_tune(p.inputs));
  const auto j = gp::to_json(s);
  CHECK(j.at("schema") == gp::kSurrogateSchema);
  const auto back = gp::surrogate_from_json(nlohmann::json::parse(j.dump()));
  Vector q(3);
  q << 0.1, -0.3, 0.7;
  CHECK((s.predict(q).mean - back.predict(q).mean).norm() < 1e-12);
  CHECK((s.predict(q).variance - back.predict(q).variance).norm() < 1e-12);
  auto bad = j;
  bad["schema"] = "other";
  CHECK_THROWS_AS(gp::surrogate_from_json(bad), Error);
}
