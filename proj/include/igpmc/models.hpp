#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "igpmc/numerics.hpp"

namespace igpmc::models {

using numerics::Matrix;
using numerics::Vector;

/// F(m): a pure, deterministic map from parameters to observables.
class ForwardModel {
 public:
  virtual ~ForwardModel() = default;

  [[nodiscard]] virtual std::size_t parameter_count() const = 0;
  [[nodiscard]] virtual std::size_t output_count() const = 0;
  [[nodiscard]] virtual Vector evaluate(const Vector& m) const = 0;
  [[nodiscard]] virtual std::vector<std::string> output_names() const;
  [[nodiscard]] virtual std::string name() const = 0;
};

/// Decorator that counts evaluate() calls; thread-safe.
class CountingModel final : public ForwardModel {
 public:
  explicit CountingModel(std::shared_ptr<const ForwardModel> inner) : inner_(std::move(inner)) {}

  [[nodiscard]] std::size_t parameter_count() const override { return inner_->parameter_count(); }
  [[nodiscard]] std::size_t output_count() const override { return inner_->output_count(); }
  [[nodiscard]] Vector evaluate(const Vector& m) const override;
  [[nodiscard]] std::vector<std::string> output_names() const override { return inner_->output_names(); }
  [[nodiscard]] std::string name() const override { return inner_->name(); }

  [[nodiscard]] std::size_t calls() const { return calls_.load(); }

 private:
  std::shared_ptr<const ForwardModel> inner_;
  mutable std::atomic<std::size_t> calls_{0};
};

/// d = m^2, the symmetric toy whose inverse has two branches.
class BimodalModel final : public ForwardModel {
 public:
  [[nodiscard]] std::size_t parameter_count() const override { return 1; }
  [[nodiscard]] std::size_t output_count() const override { return 1; }
  [[nodiscard]] Vector evaluate(const Vector& m) const override;
  [[nodiscard]] std::string name() const override { return "bimodal"; }
};

double bimodal_eval(double m);

/// F(m) = G m + b.
class LinearModel final : public ForwardModel {
 public:
  LinearModel(Matrix g, Vector b);

  [[nodiscard]] std::size_t parameter_count() const override { return static_cast<std::size_t>(g_.cols()); }
  [[nodiscard]] std::size_t output_count() const override { return static_cast<std::size_t>(g_.rows()); }
  [[nodiscard]] Vector evaluate(const Vector& m) const override;
  [[nodiscard]] std::string name() const override { return "linear"; }

  [[nodiscard]] const Matrix& matrix() const { return g_; }
  [[nodiscard]] const Vector& offset() const { return b_; }

 private:
  Matrix g_;
  Vector b_;
};

struct UniformPrior {
  double lo = 0.0;
  double hi = 1.0;
};

/// Standard normal truncated to [-bound, bound].
struct TruncatedNormalPrior {
  double bound = 4.0;
};

struct ParameterPrior {
  std::string name;
  std::variant<UniformPrior, TruncatedNormalPrior> dist;

  [[nodiscard]] double lower() const;
  [[nodiscard]] double upper() const;
  [[nodiscard]] double range() const { return upper() - lower(); }
  [[nodiscard]] double sample(numerics::RngStream& rng) const;
  /// Log density up to a constant; -inf outside the support.
  [[nodiscard]] double log_density(double x) const;
};

class PriorSpec {
 public:
  PriorSpec() = default;
  explicit PriorSpec(std::vector<ParameterPrior> params);

  static PriorSpec uniform_box(const std::vector<std::string>& names, const Vector& lo, const Vector& hi);
  static PriorSpec truncated_normal(std::size_t n, double bound, const std::string& prefix = "xi");

  [[nodiscard]] std::size_t size() const { return params_.size(); }
  [[nodiscard]] const ParameterPrior& operator[](std::size_t i) const { return params_[i]; }
  [[nodiscard]] const std::vector<ParameterPrior>& parameters() const { return params_; }
  [[nodiscard]] std::vector<std::string> names() const;

  [[nodiscard]] Vector sample(numerics::RngStream& rng) const;
  [[nodiscard]] bool contains(const Vector& m) const;
  [[nodiscard]] Vector clamp(const Vector& m) const;
  [[nodiscard]] Vector lower() const;
  [[nodiscard]] Vector upper() const;
  [[nodiscard]] Vector ranges() const;
  [[nodiscard]] double log_density(const Vector& m) const;

 private:
  std::vector<ParameterPrior> params_;
};

/// d plus a diagonal error covariance sigma^2.
struct MeasurementSet {
  Vector d;
  Vector sigma2;
  bool error_known = true;

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(d.size()); }
  /// Throws InvalidConfig when an invariant is broken.
  void validate() const;
};

struct AbsoluteNoise {
  double sigma = 0.0;
};
/// sigma_i = max(fraction * |F_i|, floor).
struct RelativeNoise {
  double fraction = 0.1;
  double floor = 1e-6;
};
/// Explicit per-observable sigma.
struct VectorNoise {
  Vector sigma;
};
using NoiseSpec = std::variant<AbsoluteNoise, RelativeNoise, VectorNoise>;

/// sigma^2 implied by the noise spec for clean outputs f.
Vector noise_variance(const NoiseSpec& noise, const Vector& f);

/// d = F(m_true) + eps with eps ~ N(0, sigma^2).
MeasurementSet make_measurements(const ForwardModel& model, const Vector& m_true,
                                 const NoiseSpec& noise, numerics::RngStream& rng);

}  // namespace igpmc::models
