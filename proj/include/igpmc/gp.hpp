#pragma once

#include <optional>

#include "json.hpp"

#include "igpmc/numerics.hpp"

namespace igpmc::gp {

using numerics::Matrix;
using numerics::Vector;

/// Squared-exponential kernel over model-output space:
///   k(f1, f2) = sigma_b2 * exp(-sum_i alpha_i (f1_i - f2_i)^2)
/// with alpha_i = 1 / (q * sd_i)^2. Dimensions whose spread is zero carry
/// alpha_i = 0 and drop out of the sum.
struct KernelConfig {
  double sigma_b2 = 1.0;
  Vector alpha;
  double q_scale = 1.0;
  /// Per-dimension spread sd_i the alphas were derived from (0 = excluded).
  Vector input_sd;
  /// False when the correlation band could not be reached and q was clamped.
  bool band_reached = true;
  /// Mean pairwise correlation over the tuning inputs.
  double mean_correlation = 0.0;

  [[nodiscard]] Eigen::Index input_dim() const { return alpha.size(); }
};

/// Builds a config from per-dimension spreads and q.
KernelConfig make_kernel(const Vector& input_sd, double q_scale, double sigma_b2 = 1.0);

double kernel_eval(const KernelConfig& cfg, const Vector& f1, const Vector& f2);
/// Correlation k / sigma_b2.
double correlation(const KernelConfig& cfg, const Vector& f1, const Vector& f2);

struct TuneOptions {
  double band_lo = 0.75;
  double band_hi = 0.95;
  double q_min = 0.1;
  double q_max = 1e3;
  int max_iterations = 60;
};

/// Chooses q so the mean pairwise correlation among the base inputs (rows)
/// sits at the middle of the band, by bisection on log q. When the band
/// cannot be reached inside [q_min, q_max], q is clamped to the nearer end
/// and band_reached is false.
KernelConfig auto_tune(const Matrix& base_inputs, const TuneOptions& options = {});

/// Mean pairwise correlation (over i != j) of the rows of `inputs`.
double mean_pairwise_correlation(const KernelConfig& cfg, const Matrix& inputs);

enum class ProcessVariance {
  kTargetVariance,  // sigma_B^2 = variance of each parameter over base points
  kInputVariance,   // sigma_B^2 = mean variance of the model outputs
};

struct Prediction {
  Vector mean;
  Vector variance;
};

/// Inverse-direction GP: inputs are model-output vectors, targets are the
/// parameter vectors that produced them. One scalar GP per parameter, all
/// sharing the correlation structure, so a single factorization of C_BB
/// serves every target. Immutable once built; predict() is thread-safe.
class InverseGpSurrogate {
 public:
  /// inputs: K x n_d, targets: K x n_m. K >= 2.
  InverseGpSurrogate(Matrix inputs, Matrix targets, KernelConfig kernel,
                     ProcessVariance variance_mode = ProcessVariance::kTargetVariance);

  [[nodiscard]] Prediction predict(const Vector& query) const;
  /// Mean only; skips the variance computation.
  [[nodiscard]] Vector predict_mean(const Vector& query) const;
  /// Kernel of target j, i.e. the shared correlation scaled by its process variance.
  [[nodiscard]] KernelConfig kernel_for(Eigen::Index j) const;

  [[nodiscard]] const Matrix& inputs() const { return inputs_; }
  [[nodiscard]] const Matrix& targets() const { return targets_; }
  [[nodiscard]] const Vector& mean_function() const { return mean_; }
  [[nodiscard]] const KernelConfig& kernel() const { return kernel_; }
  /// Process variance sigma_B^2 per target dimension.
  [[nodiscard]] const Vector& process_variance() const { return process_variance_; }
  [[nodiscard]] ProcessVariance variance_mode() const { return variance_mode_; }
  /// Diagonal jitter added to the correlation matrix, relative to its mean diagonal.
  [[nodiscard]] double jitter() const { return factor_.jitter_level(); }
  [[nodiscard]] Eigen::Index base_count() const { return inputs_.rows(); }
  [[nodiscard]] Eigen::Index input_dim() const { return inputs_.cols(); }
  [[nodiscard]] Eigen::Index target_dim() const { return targets_.cols(); }

 private:
  Matrix inputs_;
  Matrix targets_;
  Vector mean_;
  KernelConfig kernel_;
  ProcessVariance variance_mode_;
  Vector process_variance_;
  numerics::SpdFactor factor_;
  Matrix scaled_inputs_;  // inputs as columns, scaled by sqrt(alpha)
  Matrix weights_;        // R^-1 (Y - 1 mu^T)

  [[nodiscard]] Vector correlations_to(const Vector& query) const;
};

/// Builds the surrogate; equivalent to the constructor.
InverseGpSurrogate condition(const Matrix& base_inputs, const Matrix& base_targets,
                             const KernelConfig& cfg,
                             ProcessVariance variance_mode = ProcessVariance::kTargetVariance);

Prediction predict(const InverseGpSurrogate& s, const Vector& query);

/// Correlation matrix among rows of `inputs` under cfg (unit diagonal).
Matrix correlation_matrix(const KernelConfig& cfg, const Matrix& inputs);

inline constexpr const char* kSurrogateSchema = "igpmc.inverse_gp/1";

nlohmann::json to_json(const InverseGpSurrogate& s);
/// Rebuilds (and refactorizes) a surrogate from its JSON form.
InverseGpSurrogate surrogate_from_json(const nlohmann::json& j);

}  // namespace igpmc::gp
