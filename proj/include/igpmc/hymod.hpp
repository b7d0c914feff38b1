#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "igpmc/models.hpp"

namespace igpmc::models {

/// Five-parameter HYMOD: a probability-distributed soil moisture store
/// feeding a cascade of three quick linear tanks and one slow tank.
struct HymodParams {
  double c_max = 0.0;      // maximum point storage capacity [L]
  double b_exp = 0.0;      // spatial variability of capacity [-]
  double alpha_star = 0.0; // fraction of excess routed to the quick cascade [-]
  double r_s = 0.0;        // slow tank outflow fraction per step [-]
  double r_q = 0.0;        // quick tank outflow fraction per step [-]

  static HymodParams from_vector(const Vector& m);
  [[nodiscard]] Vector to_vector() const;
};

struct HymodState {
  /// Critical capacity level C in [0, c_max]: points with capacity below C are full.
  double soil_level = 0.0;
  std::array<double, 3> quick{0.0, 0.0, 0.0};
  double slow = 0.0;

  /// Basin-average water held by the soil store for the given parameters.
  [[nodiscard]] double soil_storage(const HymodParams& p) const;
  /// Total water in all stores.
  [[nodiscard]] double total_storage(const HymodParams& p) const;
};

struct HymodFlux {
  double discharge = 0.0;
  double actual_et = 0.0;
  double excess = 0.0;
};

/// One time step. Throws NonFiniteForcing for negative or non-finite inputs.
HymodFlux hymod_step(HymodState& state, const HymodParams& p, double rain, double pet);

struct Forcing {
  std::vector<double> rain;
  std::vector<double> pet;

  [[nodiscard]] std::size_t size() const { return rain.size(); }
};

struct HymodRun {
  std::vector<double> discharge;  // all steps, including warm-up
  double total_rain = 0.0;
  double total_discharge = 0.0;
  double total_et = 0.0;
  double final_storage = 0.0;
};

HymodRun hymod_run(const HymodParams& p, const Forcing& forcing, HymodState initial = {});

/// Discharge series with the first `warmup` steps dropped.
std::vector<double> hymod_simulate(const HymodParams& p, const Forcing& forcing, std::size_t warmup);

/// Reads `step,rain,pet` CSV.
Forcing read_forcing_csv(std::istream& in);
void write_forcing_csv(std::ostream& out, const Forcing& forcing);

struct SyntheticForcingOptions {
  std::size_t steps = 430;
  double wet_probability = 0.4;
  double mean_storm_depth = 9.0;  // [L/step], exponential
  double pet_mean = 3.0;
  double pet_amplitude = 1.5;
  double period = 365.0;
};

/// Storm arrivals as a Bernoulli process with exponential depths, and a
/// sinusoidal potential evapotranspiration.
Forcing synthetic_forcing(const SyntheticForcingOptions& options, numerics::RngStream& rng);

class HymodModel final : public ForwardModel {
 public:
  HymodModel(Forcing forcing, std::size_t warmup);

  [[nodiscard]] std::size_t parameter_count() const override { return 5; }
  [[nodiscard]] std::size_t output_count() const override { return forcing_.size() - warmup_; }
  [[nodiscard]] Vector evaluate(const Vector& m) const override;
  [[nodiscard]] std::string name() const override { return "hymod"; }

  [[nodiscard]] const Forcing& forcing() const { return forcing_; }
  [[nodiscard]] std::size_t warmup() const { return warmup_; }

 private:
  Forcing forcing_;
  std::size_t warmup_;
};

/// Default prior box: C_max [1,500], b_exp [0.1,2], alpha* [0.1,0.99],
/// R_s [0.001,0.1], R_q [0.1,0.99].
PriorSpec hymod_default_prior();

}  // namespace igpmc::models
