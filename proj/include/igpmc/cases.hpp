#pragma once

#include <memory>
#include <string>
#include <vector>

#include "igpmc/estimator.hpp"
#include "igpmc/groundwater.hpp"
#include "igpmc/hymod.hpp"
#include "igpmc/mcmc.hpp"

namespace igpmc::cases {

using models::ForwardModel;
using models::MeasurementSet;
using models::PriorSpec;
using numerics::Vector;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Contaminant source identification in a three-zone aquifer.
struct SourceIdConfig {
  std::size_t nx = 40;
  std::size_t ny = 20;
  double lx = 20.0;
  double ly = 10.0;
  double head_left = 12.0;
  double head_right = 11.0;
  double porosity = 0.25;
  double alpha_l = 0.3;
  double alpha_t = 0.03;
  std::vector<Point> observation_points{{9.0, 5.0}, {13.0, 5.0}, {17.0, 5.0}, {13.0, 4.0}, {13.0, 6.0}};
  std::vector<double> observation_times{2.0, 4.0, 6.0, 8.0, 10.0};
  // Source rectangle and parameter bounds.
  double source_x_lo = 2.0;
  double source_x_hi = 6.0;
  double source_y_lo = 3.0;
  double source_y_hi = 7.0;
  double strength_max = 4.0;
  double log_k_lo = 1.5;
  double log_k_hi = 2.5;
  std::size_t zones = 3;  // equal vertical strips
  std::size_t source_intervals = 6;
};

/// (x_s, y_s, S_1..S_6, Y_1..Y_3) -> concentrations at every (time, point),
/// time-major, followed by the steady heads at the points.
class SourceIdModel final : public ForwardModel {
 public:
  explicit SourceIdModel(SourceIdConfig cfg = {});

  [[nodiscard]] std::size_t parameter_count() const override { return 2 + cfg_.source_intervals + cfg_.zones; }
  [[nodiscard]] std::size_t output_count() const override;
  [[nodiscard]] Vector evaluate(const Vector& m) const override;
  [[nodiscard]] std::vector<std::string> output_names() const override;
  [[nodiscard]] std::string name() const override { return "source_id"; }

  [[nodiscard]] const SourceIdConfig& config() const { return cfg_; }
  /// Grid with the zone log-conductivities filled in.
  [[nodiscard]] groundwater::FlowGrid grid(const Vector& zone_log_k) const;

 private:
  SourceIdConfig cfg_;
};

PriorSpec source_id_prior(const SourceIdConfig& cfg = {});
std::shared_ptr<const ForwardModel> case3_model(const SourceIdConfig& cfg = {});

/// Transient heads in a Gaussian random log-conductivity field.
struct KlCaseConfig {
  std::size_t n = 21;
  double length = 800.0;
  double head_left = 202.0;
  double head_right = 198.0;
  double storage = 1e-4;
  double sigma_y2 = 1.0;
  double lambda = 320.0;
  double mean_log_k = 0.0;
  std::size_t n_terms = 20;
  std::size_t n_terms_truth = 50;
  double dt = 0.1;
  std::size_t steps_per_observation = 6;
  std::size_t observation_count = 10;
  std::size_t observation_grid = 5;  // points per axis
  double bound = 4.0;
};

/// xi -> heads at every (time, point), time-major.
class KlFieldModel final : public ForwardModel {
 public:
  KlFieldModel(KlCaseConfig cfg, groundwater::KlField field);

  [[nodiscard]] std::size_t parameter_count() const override { return field_.n_terms(); }
  [[nodiscard]] std::size_t output_count() const override { return points_.size() * cfg_.observation_count; }
  [[nodiscard]] Vector evaluate(const Vector& xi) const override;
  [[nodiscard]] std::string name() const override { return "kl_field"; }

  [[nodiscard]] const groundwater::KlField& field() const { return field_; }
  [[nodiscard]] const KlCaseConfig& config() const { return cfg_; }
  [[nodiscard]] const std::vector<Point>& points() const { return points_; }
  [[nodiscard]] groundwater::FlowGrid grid(const Vector& log_k) const;
  [[nodiscard]] std::vector<double> observation_times() const;

 private:
  KlCaseConfig cfg_;
  groundwater::KlField field_;
  std::vector<Point> points_;
};

groundwater::KlField kl_case_field(const KlCaseConfig& cfg, std::size_t n_terms);
std::shared_ptr<const KlFieldModel> case4_model(const groundwater::KlField& field, const KlCaseConfig& cfg = {});

/// A fully specified twin experiment.
struct CaseSetup {
  std::string name;
  std::shared_ptr<const ForwardModel> model;
  PriorSpec prior;
  Vector m_true;
  MeasurementSet ms;
  models::NoiseSpec noise;
  estimator::IgpmcConfig igpmc;
  mcmc::McmcConfig mcmc;
  mcmc::LikelihoodSpec likelihood;
  /// Case-specific extras (forcing for hymod, truth field for kl_field).
  std::shared_ptr<const ForwardModel> truth_model;  // model that generated d (differs for kl_field)
  Vector truth_log_k;
};

inline constexpr double kBimodalTruth = 0.230;
inline constexpr double kBimodalSigma = 0.01;
inline constexpr double kBimodalMeasurement = 0.0414;

/// d drawn from the seed.
CaseSetup bimodal_case(std::uint64_t seed);
/// The canonical realization d = 0.0414.
CaseSetup bimodal_canonical();
CaseSetup hymod_case(std::uint64_t seed);
CaseSetup source_id_case(std::uint64_t seed);
CaseSetup kl_field_case(std::uint64_t seed);

/// Dispatch on "bimodal" | "hymod" | "source_id" | "kl_field".
CaseSetup make_case(const std::string& name, std::uint64_t seed);

}  // namespace igpmc::cases
