#include <array>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "igpmc/mcmc.hpp"

using namespace igpmc;
using numerics::Matrix;
using numerics::Vector;

namespace {

models::MeasurementSet ms1(double d, double s2) { return {Vector::Constant(1, d), Vector::Constant(1, s2), true}; }

std::vector<double> column(const Matrix& m, Eigen::Index j) {
  return {m.col(j).data(), m.col(j).data() + m.rows()};
}

}  // namespace

TEST_CASE("log likelihood hand values") {
  const double c = 0.5 * std::log(2.0 * std::numbers::pi);
  const auto homo = mcmc::LikelihoodSpec::homoscedastic(1.0);
  CHECK(mcmc::log_likelihood(Vector::Zero(1), ms1(0.0, 1.0), homo) == doctest::Approx(-c));
  CHECK(mcmc::log_likelihood(Vector::Constant(1, 1.0), ms1(0.0, 1.0), homo) == doctest::Approx(-0.5 - c));
  const models::MeasurementSet two{Vector::Zero(2), Vector::Ones(2), true};
  CHECK(mcmc::log_likelihood(Vector::Ones(2), two, mcmc::LikelihoodSpec::integrated()) ==
        doctest::Approx(-std::log(2.0)));
  const auto het = mcmc::LikelihoodSpec::heteroscedastic((Vector(2) << 1.0, 4.0).finished());
  const double want = -0.5 * (1.0 + 1.0) - 0.5 * std::log(2.0 * std::numbers::pi) -
                      0.5 * std::log(2.0 * std::numbers::pi * 4.0);
  CHECK(mcmc::log_likelihood((Vector(2) << 1, 2).finished(), two, het) == doctest::Approx(want));
  CHECK_THROWS_AS(mcmc::LikelihoodSpec::homoscedastic(0.0).validate(1), Error);
  CHECK_THROWS_AS(mcmc::LikelihoodSpec::heteroscedastic(Vector::Ones(3)).validate(2), Error);
}

TEST_CASE("acceptance depends only on the log-likelihood difference inside a uniform prior") {
  const mcmc::ChainState a{Vector::Zero(1), -3.0, -0.7};
  const mcmc::ChainState b{Vector::Ones(1), -1.0, -0.7};
  CHECK(mcmc::log_accept_ratio(a, b) == doctest::Approx(2.0));
  CHECK(mcmc::log_accept_ratio(b, a) == doctest::Approx(-2.0));
}

TEST_CASE("a zero move is always accepted") {
  const models::LinearModel model(Matrix::Identity(1, 1), Vector::Zero(1));
  const auto prior = models::PriorSpec::uniform_box({"x"}, Vector::Constant(1, -5.0), Vector::Constant(1, 5.0));
  const auto ms = ms1(0.0, 1.0);
  const auto spec = mcmc::LikelihoodSpec::homoscedastic(1.0);
  mcmc::McmcConfig cfg;
  cfg.gamma_scale = 0.0;
  cfg.jitter = 0.0;
  cfg.jump_probability = 0.0;
  mcmc::SamplerState st;
  numerics::RngStream rng(41, 0);
  for (int i = 0; i < 3; ++i) {
    const Vector x = prior.sample(rng);
    st.chains.push_back({x, mcmc::log_likelihood(model.evaluate(x), ms, spec), prior.log_density(x)});
  }
  for (int i = 0; i < 30; ++i) st.archive.push_back(prior.sample(rng));
  for (int g = 0; g < 20; ++g) mcmc::de_step(st, model, prior, ms, spec, cfg, rng);
  CHECK(st.proposed == 60);
  CHECK(st.accepted == st.proposed);
}

TEST_CASE("discrete five-state Metropolis chain reaches its target") {
  const std::array<double, 5> target{0.1, 0.25, 0.05, 0.4, 0.2};
  numerics::RngStream rng(42, 0);
  std::array<double, 5> visits{};
  std::size_t state = 0;
  const int steps = 1000000;
  for (int s = 0; s < steps; ++s) {
    const std::size_t next = (state + (rng.uniform() < 0.5 ? 1 : 4)) % 5;
    const mcmc::ChainState cur{Vector::Constant(1, double(state)), std::log(target[state]), 0.0};
    const mcmc::ChainState prop{Vector::Constant(1, double(next)), std::log(target[next]), 0.0};
    const double r = mcmc::log_accept_ratio(cur, prop);
    if (r >= 0.0 || std::log(rng.uniform()) < r) state = next;
    visits[state] += 1.0;
  }
  double tv = 0.0;
  for (std::size_t i = 0; i < 5; ++i) tv += 0.5 * std::abs(visits[i] / steps - target[i]);
  CHECK(tv < 1e-2);
}

TEST_CASE("flat likelihood samples the uniform prior") {
  const models::LinearModel model(Matrix::Zero(1, 1), Vector::Zero(1));
  const auto prior = models::PriorSpec::uniform_box({"x"}, Vector::Constant(1, -1.0), Vector::Constant(1, 1.0));
  mcmc::McmcConfig cfg;
  cfg.budget = 14000;
  cfg.seed = 43;
  const auto r = mcmc::run_mcmc(prior, model, ms1(0.0, 1.0), mcmc::LikelihoodSpec::homoscedastic(1.0), cfg);
  CHECK(r.samples.rows() >= 10000);
  const double ks = numerics::ks_distance_to_cdf(column(r.samples, 0),
                                                 [](double x) { return std::clamp((x + 1.0) / 2.0, 0.0, 1.0); });
  CHECK(ks < 0.05);
  CHECK(r.samples.minCoeff() >= -1.0);
  CHECK(r.samples.maxCoeff() <= 1.0);
}

TEST_CASE("standard normal target") {
  const models::LinearModel model(Matrix::Identity(1, 1), Vector::Zero(1));
  const auto prior = models::PriorSpec::uniform_box({"x"}, Vector::Constant(1, -10.0), Vector::Constant(1, 10.0));
  mcmc::McmcConfig cfg;
  cfg.budget = 28000;
  cfg.seed = 44;
  const auto r = mcmc::run_mcmc(prior, model, ms1(0.0, 1.0), mcmc::LikelihoodSpec::homoscedastic(1.0), cfg);
  CHECK(r.samples.rows() >= 20000);
  CHECK(std::abs(r.mean[0]) < 0.05);
  CHECK(r.sd[0] > 0.9);
  CHECK(r.sd[0] < 1.1);
  CHECK(r.rhat[0] < 1.1);
}

TEST_CASE("linear-Gaussian posterior matches the conjugate solution") {
  Matrix g(3, 2);
  g << 1, 0, 0, 1, 1, 1;
  const models::LinearModel model(g, Vector::Zero(3));
  const auto prior = models::PriorSpec::uniform_box({"a", "b"}, Vector::Constant(2, -20.0), Vector::Constant(2, 20.0));
  const Vector d = (Vector(3) << 0.3, -0.2, 0.4).finished();
  const double s2 = 0.25;
  const models::MeasurementSet ms{d, Vector::Constant(3, s2), true};
  // Flat prior: posterior N((G'G)^-1 G'd, s2 (G'G)^-1).
  const Matrix gtg = g.transpose() * g;
  const Vector mu = gtg.ldlt().solve(g.transpose() * d);
  const Matrix cov = s2 * gtg.inverse();
  mcmc::McmcConfig cfg;
  cfg.budget = 30000;
  cfg.seed = 45;
  const auto r = mcmc::run_mcmc(prior, model, ms, mcmc::LikelihoodSpec::homoscedastic(s2), cfg);
  for (Eigen::Index j = 0; j < 2; ++j) {
    CHECK(std::abs(r.mean[j] - mu[j]) < 0.1 * std::sqrt(cov(j, j)) + 0.02);
    CHECK(r.sd[j] == doctest::Approx(std::sqrt(cov(j, j))).epsilon(0.1));
  }
}

TEST_CASE("runs are deterministic, budgeted and tagged by chain") {
  const models::BimodalModel model;
  const auto prior = models::PriorSpec::uniform_box({"m"}, Vector::Constant(1, -1.0), Vector::Constant(1, 1.0));
  mcmc::McmcConfig cfg;
  cfg.n_chains = 2;
  cfg.budget = 2000;
  cfg.seed = 46;
  auto counted = std::make_shared<models::CountingModel>(std::make_shared<models::BimodalModel>());
  const auto a = mcmc::run_mcmc(prior, *counted, ms1(0.0414, 1e-4), mcmc::LikelihoodSpec::homoscedastic(1e-4), cfg);
  const auto b = mcmc::run_mcmc(prior, model, ms1(0.0414, 1e-4), mcmc::LikelihoodSpec::homoscedastic(1e-4), cfg);
  CHECK(a.samples == b.samples);
  CHECK(a.eval_count <= cfg.budget);
  CHECK(counted->calls() == a.eval_count);
  CHECK(a.sample_chain.size() == static_cast<std::size_t>(a.samples.rows()));
  CHECK(a.chains.size() == 2);
  CHECK(a.samples.cwiseAbs().maxCoeff() <= 1.0);
}

TEST_CASE("gelman-rubin diagnostics") {
  Matrix c(100, 1);
  for (Eigen::Index i = 0; i < 100; ++i) c(i, 0) = std::sin(0.3 * i);
  const Vector same = mcmc::gelman_rubin({c, c, c});
  CHECK(same[0] == doctest::Approx(99.0 / 100.0));

  numerics::RngStream rng(47, 0);
  Matrix p0(50, 1), p1(50, 1);
  for (Eigen::Index i = 0; i < 50; ++i) {
    p0(i, 0) = 0.0 + 0.1 * rng.normal();
    p1(i, 0) = 10.0 + 0.1 * rng.normal();
  }
  CHECK(mcmc::gelman_rubin({p0, p1})[0] > 1.2);

  std::vector<Matrix> iid(3, Matrix(1000, 2));
  for (auto& m : iid)
    for (Eigen::Index i = 0; i < 1000; ++i) m.row(i) << rng.normal(), rng.normal();
  const Vector r = mcmc::gelman_rubin(iid);
  CHECK(r.maxCoeff() < 1.05);
  CHECK(r.minCoeff() >= 1.0 - 1e-2);

  CHECK_THROWS_AS(mcmc::gelman_rubin({c}), Error);
  CHECK_THROWS_AS(mcmc::gelman_rubin({c.topRows(5), c.topRows(5)}), Error);
}

TEST_CASE("invalid sampler configurations are rejected") {
  mcmc::McmcConfig c;
  c.n_chains = 1;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.budget = 5;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.burn_in = 1.0;
  CHECK_THROWS_AS(c.validate(), Error);
}
