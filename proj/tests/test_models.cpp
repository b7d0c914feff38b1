#include <cmath>
#include <sstream>

#include "doctest.h"
#include "igpmc/hymod.hpp"
#include "igpmc/models.hpp"

using namespace igpmc;
using models::HymodParams;
using models::HymodState;
using numerics::Matrix;
using numerics::Vector;

namespace {

const HymodParams kTruth{180.0, 0.6, 0.65, 0.025, 0.45};

}  // namespace

TEST_CASE("bimodal model values and symmetry") {
  CHECK(models::bimodal_eval(0.0) == 0.0);
  CHECK(models::bimodal_eval(0.230) == doctest::Approx(0.0529));
  CHECK(models::bimodal_eval(-0.2035) == doctest::Approx(0.04141).epsilon(1e-3));
  numerics::RngStream rng(51, 0);
  const models::BimodalModel m;
  for (int i = 0; i < 100; ++i) {
    const double x = rng.uniform(-1.0, 1.0);
    CHECK(models::bimodal_eval(x) == models::bimodal_eval(-x));
    CHECK(m.evaluate(Vector::Constant(1, x)) == m.evaluate(Vector::Constant(1, x)));
  }
}

TEST_CASE("priors: support, clamping and densities") {
  const auto box = models::PriorSpec::uniform_box({"a", "b"}, Vector::Constant(2, -1.0), Vector::Constant(2, 2.0));
  CHECK(box.contains(Vector::Zero(2)));
  CHECK_FALSE(box.contains(Vector::Constant(2, 3.0)));
  CHECK(box.clamp(Vector::Constant(2, 3.0)) == Vector::Constant(2, 2.0));
  CHECK(box.ranges() == Vector::Constant(2, 3.0));
  CHECK(std::isinf(box.log_density(Vector::Constant(2, -5.0))));
  CHECK(box.names() == std::vector<std::string>{"a", "b"});

  const auto tn = models::PriorSpec::truncated_normal(3, 4.0);
  CHECK(tn.lower() == Vector::Constant(3, -4.0));
  numerics::RngStream rng(52, 0);
  std::vector<double> xs;
  for (int i = 0; i < 20000; ++i) {
    const Vector x = tn.sample(rng);
    CHECK(tn.contains(x));
    xs.push_back(x[0]);
  }
  CHECK(std::abs(numerics::mean(xs)) < 0.03);
  CHECK(numerics::stddev(xs) == doctest::Approx(1.0).epsilon(0.03));
  CHECK(tn[0].log_density(1.0) - tn[0].log_density(0.0) == doctest::Approx(-0.5));
  CHECK_THROWS_AS(models::PriorSpec::uniform_box({"x"}, Vector::Constant(1, 1.0), Vector::Constant(1, 1.0)), Error);
}

TEST_CASE("measurements and noise rules") {
  const models::BimodalModel m;
  numerics::RngStream rng(53, 0);
  const auto clean = models::make_measurements(m, Vector::Constant(1, 0.23), models::AbsoluteNoise{0.0}, rng);
  CHECK(clean.d[0] == models::bimodal_eval(0.23));
  const Vector f = (Vector(2) << 2.0, 0.0).finished();
  const Vector s2 = models::noise_variance(models::RelativeNoise{0.1, 1e-6}, f);
  CHECK(std::sqrt(s2[0]) == doctest::Approx(0.2));
  CHECK(std::sqrt(s2[1]) == doctest::Approx(1e-6));
  std::vector<double> ds;
  for (int i = 0; i < 5000; ++i)
    ds.push_back(models::make_measurements(m, Vector::Constant(1, 0.23), models::AbsoluteNoise{0.01}, rng).d[0]);
  CHECK(numerics::mean(ds) == doctest::Approx(0.0529).epsilon(0.01));
  CHECK(numerics::stddev(ds) == doctest::Approx(0.01).epsilon(0.05));
}

TEST_CASE("hymod dry system stays put") {
  HymodState s;
  const auto f = models::hymod_step(s, kTruth, 0.0, 0.0);
  CHECK(f.discharge == 0.0);
  CHECK(s.soil_level == 0.0);
  CHECK(s.slow == 0.0);
  const models::Forcing zero{std::vector<double>(50, 0.0), std::vector<double>(50, 0.0)};
  for (double q : models::hymod_simulate(kTruth, zero, 10)) CHECK(q == 0.0);
}

TEST_CASE("hymod saturated store turns all rain into excess") {
  HymodState s;
  s.soil_level = kTruth.c_max;
  const auto f = models::hymod_step(s, kTruth, 7.0, 0.0);
  CHECK(f.excess == doctest::Approx(7.0));
}

TEST_CASE("hymod excess for a uniform capacity distribution") {
  // b = 1: storage S(C) = C - C^2 / (2 C_max). From level 50 with 10 of rain:
  // S(60) - S(50) = 42 - 37.5 = 4.5 is stored, 5.5 spills.
  const HymodParams p{100.0, 1.0, 0.5, 0.01, 0.5};
  HymodState s;
  s.soil_level = 50.0;
  CHECK(s.soil_storage(p) == doctest::Approx(37.5));
  const auto f = models::hymod_step(s, p, 10.0, 0.0);
  CHECK(f.excess == doctest::Approx(5.5).epsilon(1e-12));
  CHECK(s.soil_level == doctest::Approx(60.0).epsilon(1e-12));
}

TEST_CASE("hymod water balance and non-negativity under random forcing") {
  numerics::RngStream rng(54, 0);
  const auto prior = models::hymod_default_prior();
  for (int trial = 0; trial < 50; ++trial) {
    const auto forcing = models::synthetic_forcing({}, rng);
    HymodParams p = HymodParams::from_vector(prior.sample(rng));
    HymodState s;
    double rain = 0.0, out = 0.0;
    for (std::size_t t = 0; t < forcing.size(); ++t) {
      const double before = s.total_storage(p);
      const auto f = models::hymod_step(s, p, forcing.rain[t], forcing.pet[t]);
      const double after = s.total_storage(p);
      const double scale = std::max({1.0, before, forcing.rain[t]});
      CHECK(std::abs(forcing.rain[t] - f.discharge - f.actual_et - (after - before)) <= 1e-9 * scale);
      CHECK(f.discharge >= 0.0);
      CHECK(s.slow >= 0.0);
      for (double q : s.quick) CHECK(q >= 0.0);
      CHECK(s.soil_level >= 0.0);
      CHECK(s.soil_level <= p.c_max * (1.0 + 1e-12));
      rain += forcing.rain[t];
      out += f.discharge + f.actual_et;
    }
    const auto run = models::hymod_run(p, forcing);
    CHECK(std::abs(run.total_rain - run.total_discharge - run.total_et - run.final_storage) <= 1e-9 * run.total_rain);
  }
  HymodState s;
  CHECK_THROWS_AS(models::hymod_step(s, kTruth, -1.0, 0.0), Error);
  CHECK_THROWS_AS(models::hymod_step(s, kTruth, NAN, 0.0), Error);
}

TEST_CASE("hymod model drops warm-up and is pure") {
  numerics::RngStream rng(55, 0);
  const auto forcing = models::synthetic_forcing({}, rng);
  const models::HymodModel m(forcing, 65);
  CHECK(m.output_count() == 365);
  const Vector a = m.evaluate(kTruth.to_vector());
  CHECK(a == m.evaluate(kTruth.to_vector()));
  const auto full = models::hymod_run(kTruth, forcing).discharge;
  for (Eigen::Index i = 0; i < a.size(); ++i) CHECK(a[i] == full[static_cast<std::size_t>(i) + 65]);
  CHECK(HymodParams::from_vector(kTruth.to_vector()).c_max == kTruth.c_max);

  numerics::RngStream nrng(56, 0);
  const auto ms = models::make_measurements(m, kTruth.to_vector(), models::AbsoluteNoise{0.0}, nrng);
  CHECK(ms.d == a);
}

TEST_CASE("forcing CSV round trip") {
  numerics::RngStream rng(57, 0);
  const auto forcing = models::synthetic_forcing({}, rng);
  std::stringstream ss;
  models::write_forcing_csv(ss, forcing);
  const auto back = models::read_forcing_csv(ss);
  REQUIRE(back.size() == forcing.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back.rain[i] == forcing.rain[i]);
    CHECK(back.pet[i] == forcing.pet[i]);
  }
  std::stringstream bad("step,rain,pet\n0,1\n");
  CHECK_THROWS_AS(models::read_forcing_csv(bad), Error);
}

TEST_CASE("linear model and counting decorator") {
  Matrix g(2, 2);
  g << 1, 2, 3, 4;
  auto lin = std::make_shared<models::LinearModel>(g, Vector::Ones(2));
  models::CountingModel c(lin);
  CHECK(c.evaluate(Vector::Ones(2)) == (Vector(2) << 4, 8).finished());
  (void)c.evaluate(Vector::Zero(2));
  CHECK(c.calls() == 2);
}
