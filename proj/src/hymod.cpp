#include "igpmc/hymod.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace igpmc::models {

namespace {

double max_storage(const HymodParams& p) { return p.c_max / (p.b_exp + 1.0); }

// Basin storage for critical capacity c under the Pareto capacity distribution
// F(c) = 1 - (1 - c/c_max)^b.
double storage_at_level(const HymodParams& p, double c) {
  const double rel = std::clamp(1.0 - c / p.c_max, 0.0, 1.0);
  return max_storage(p) * (1.0 - std::pow(rel, p.b_exp + 1.0));
}

double level_at_storage(const HymodParams& p, double w) {
  const double rel = std::clamp(1.0 - w / max_storage(p), 0.0, 1.0);
  return p.c_max * (1.0 - std::pow(rel, 1.0 / (p.b_exp + 1.0)));
}

}  // namespace

HymodParams HymodParams::from_vector(const Vector& m) {
  if (m.size() != 5) {
    throw Error(ErrorCode::kDimensionMismatch, "HYMOD takes 5 parameters");
  }
  return {m[0], m[1], m[2], m[3], m[4]};
}

Vector HymodParams::to_vector() const {
  Vector v(5);
  v << c_max, b_exp, alpha_star, r_s, r_q;
  return v;
}

double HymodState::soil_storage(const HymodParams& p) const { return storage_at_level(p, soil_level); }

double HymodState::total_storage(const HymodParams& p) const {
  return soil_storage(p) + quick[0] + quick[1] + quick[2] + slow;
}

HymodFlux hymod_step(HymodState& state, const HymodParams& p, double rain, double pet) {
  if (!std::isfinite(rain) || !std::isfinite(pet) || rain < 0.0 || pet < 0.0) {
    throw Error(ErrorCode::kNonFiniteForcing, "rain and pet must be finite and non-negative");
  }
  HymodFlux flux;

  // Rainfall excess: points whose capacity is exceeded spill.
  const double w0 = storage_at_level(p, state.soil_level);
  const double level_wet = std::min(state.soil_level + rain, p.c_max);
  double w1 = storage_at_level(p, level_wet);
  double excess = rain - (w1 - w0);
  if (excess < 0.0) {
    // dW/dC <= 1, so this only triggers on round-off.
    w1 = w0 + rain;
    excess = 0.0;
  }

  const double et = std::min(pet * w1 / max_storage(p), w1);
  const double w2 = w1 - et;
  state.soil_level = level_at_storage(p, w2);

  double slow_total = state.slow + (1.0 - p.alpha_star) * excess;
  const double slow_out = p.r_s * slow_total;
  state.slow = slow_total - slow_out;

  double inflow = p.alpha_star * excess;
  for (auto& tank : state.quick) {
    const double total = tank + inflow;
    inflow = p.r_q * total;
    tank = total - inflow;
  }

  flux.discharge = slow_out + inflow;
  flux.actual_et = et;
  flux.excess = excess;
  return flux;
}

HymodRun hymod_run(const HymodParams& p, const Forcing& forcing, HymodState state) {
  if (forcing.rain.size() != forcing.pet.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "rain and pet series lengths differ");
  }
  HymodRun run;
  const double initial = state.total_storage(p);
  run.discharge.reserve(forcing.size());
  for (std::size_t t = 0; t < forcing.size(); ++t) {
    const HymodFlux f = hymod_step(state, p, forcing.rain[t], forcing.pet[t]);
    run.discharge.push_back(f.discharge);
    run.total_rain += forcing.rain[t];
    run.total_discharge += f.discharge;
    run.total_et += f.actual_et;
  }
  run.final_storage = state.total_storage(p) - initial;
  return run;
}

std::vector<double> hymod_simulate(const HymodParams& p, const Forcing& forcing, std::size_t warmup) {
  if (forcing.size() <= warmup) {
    throw Error(ErrorCode::kInvalidConfig, "forcing series must be longer than the warm-up");
  }
  HymodRun run = hymod_run(p, forcing);
  return {run.discharge.begin() + static_cast<std::ptrdiff_t>(warmup), run.discharge.end()};
}

Forcing read_forcing_csv(std::istream& in) {
  Forcing f;
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::kIoError, "forcing CSV is empty");
  }
  line.erase(std::remove_if(line.begin(), line.end(), [](char c) { return c == '\r' || c == ' '; }),
             line.end());
  if (line != "step,rain,pet") {
    throw Error(ErrorCode::kIoError, "forcing CSV header must be step,rain,pet");
  }
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row;
    std::stringstream ss(line);
    std::string step, rain, pet;
    if (!std::getline(ss, step, ',') || !std::getline(ss, rain, ',') || !std::getline(ss, pet)) {
      throw Error(ErrorCode::kIoError, "malformed forcing row " + std::to_string(row));
    }
    try {
      f.rain.push_back(std::stod(rain));
      f.pet.push_back(std::stod(pet));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kIoError, "non-numeric forcing row " + std::to_string(row));
    }
  }
  return f;
}

void write_forcing_csv(std::ostream& out, const Forcing& forcing) {
  out << "step,rain,pet\n";
  out.precision(17);
  for (std::size_t t = 0; t < forcing.size(); ++t) {
    out << t << ',' << forcing.rain[t] << ',' << forcing.pet[t] << '\n';
  }
}

Forcing synthetic_forcing(const SyntheticForcingOptions& options, numerics::RngStream& rng) {
  Forcing f;
  f.rain.reserve(options.steps);
  f.pet.reserve(options.steps);
  for (std::size_t t = 0; t < options.steps; ++t) {
    const bool wet = rng.uniform() < options.wet_probability;
    const double u = rng.uniform();
    f.rain.push_back(wet ? -options.mean_storm_depth * std::log1p(-u) : 0.0);
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(t) / options.period;
    f.pet.push_back(std::max(0.0, options.pet_mean + options.pet_amplitude * std::sin(phase)));
  }
  return f;
}

HymodModel::HymodModel(Forcing forcing, std::size_t warmup)
    : forcing_(std::move(forcing)), warmup_(warmup) {
  if (forcing_.rain.size() != forcing_.pet.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "rain and pet series lengths differ");
  }
  if (forcing_.size() <= warmup_) {
    throw Error(ErrorCode::kInvalidConfig, "forcing series must be longer than the warm-up");
  }
}

Vector HymodModel::evaluate(const Vector& m) const {
  const auto q = hymod_simulate(HymodParams::from_vector(m), forcing_, warmup_);
  return Eigen::Map<const Vector>(q.data(), static_cast<Eigen::Index>(q.size()));
}

PriorSpec hymod_default_prior() {
  Vector lo(5), hi(5);
  lo << 1.0, 0.1, 0.1, 0.001, 0.1;
  hi << 500.0, 2.0, 0.99, 0.1, 0.99;
  return PriorSpec::uniform_box({"c_max", "b_exp", "alpha_star", "r_s", "r_q"}, lo, hi);
}

}  // namespace igpmc::models
