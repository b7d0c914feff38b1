#include "igpmc/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace igpmc::gp {

namespace {

void require_dim(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + ": " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

template <typename A, typename B>
double weighted_sq_distance(const Vector& alpha, const A& f1, const B& f2) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    if (alpha[i] == 0.0) continue;
    const double diff = f1[i] - f2[i];
    acc += alpha[i] * diff * diff;
  }
  return acc;
}

// Points as columns, each coordinate scaled by sqrt(w_i), so that a weighted
// squared distance becomes a plain squared norm over contiguous memory.
Matrix scaled_columns(const Matrix& rows, const Vector& w) {
  return (rows * w.cwiseSqrt().asDiagonal()).transpose();
}

// Squared distances between every column of s and q.
Vector sq_distances_to(const Matrix& s, const Vector& q) {
  return (s.colwise() - q).colwise().squaredNorm().transpose();
}

Vector column_sd(const Matrix& x) {
  Vector sd = Vector::Zero(x.cols());
  if (x.rows() < 2) return sd;
  const Vector mu = x.colwise().mean();
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double ss = (x.col(j).array() - mu[j]).square().sum();
    sd[j] = std::sqrt(ss / static_cast<double>(x.rows() - 1));
  }
  return sd;
}

// Per-pair squared distances in sd-normalized units: S_jk = sum_i (d_i / sd_i)^2.
// The correlation at scale q is then exp(-S_jk / q^2).
Eigen::ArrayXd normalized_pair_distances(const Matrix& x, const Vector& sd) {
  const Eigen::Index k = x.rows();
  Vector inv_var = Vector::Zero(sd.size());
  for (Eigen::Index i = 0; i < sd.size(); ++i) {
    if (sd[i] > 0.0) inv_var[i] = 1.0 / (sd[i] * sd[i]);
  }
  const Matrix s = scaled_columns(x, inv_var);
  Eigen::ArrayXd out(k * (k - 1) / 2);
  Eigen::Index n = 0;
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = a + 1; b < k; ++b) out[n++] = (s.col(a) - s.col(b)).squaredNorm();
  }
  return out;
}

double mean_correlation_at(const Eigen::ArrayXd& s, double q) {
  return (s * (-1.0 / (q * q))).exp().mean();
}

}  // namespace

KernelConfig make_kernel(const Vector& input_sd, double q_scale, double sigma_b2) {
  KernelConfig cfg;
  cfg.sigma_b2 = sigma_b2;
  cfg.q_scale = q_scale;
  cfg.input_sd = input_sd;
  cfg.alpha = Vector::Zero(input_sd.size());
  for (Eigen::Index i = 0; i < input_sd.size(); ++i) {
    if (input_sd[i] > 0.0) {
      const double len = q_scale * input_sd[i];
      cfg.alpha[i] = 1.0 / (len * len);
    }
  }
  return cfg;
}

double correlation(const KernelConfig& cfg, const Vector& f1, const Vector& f2) {
  require_dim(f1.size(), cfg.alpha.size(), "kernel input dimension");
  require_dim(f2.size(), cfg.alpha.size(), "kernel input dimension");
  return std::exp(-weighted_sq_distance(cfg.alpha, f1, f2));
}

double kernel_eval(const KernelConfig& cfg, const Vector& f1, const Vector& f2) {
  return cfg.sigma_b2 * correlation(cfg, f1, f2);
}

double mean_pairwise_correlation(const KernelConfig& cfg, const Matrix& inputs) {
  const Eigen::Index k = inputs.rows();
  if (k < 2) {
    throw Error(ErrorCode::kTooFewPoints, "need at least two inputs for pairwise correlation");
  }
  require_dim(inputs.cols(), cfg.alpha.size(), "input dimension");
  const Matrix s = scaled_columns(inputs, cfg.alpha);
  double acc = 0.0;
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = a + 1; b < k; ++b) acc += std::exp(-(s.col(a) - s.col(b)).squaredNorm());
  }
  return acc / (0.5 * static_cast<double>(k * (k - 1)));
}

KernelConfig auto_tune(const Matrix& base_inputs, const TuneOptions& options) {
  if (base_inputs.rows() < 2) {
    throw Error(ErrorCode::kDegenerateInputs, "auto_tune needs at least two base inputs");
  }
  const Vector sd = column_sd(base_inputs);
  if (!(sd.maxCoeff() > 0.0)) {
    throw Error(ErrorCode::kDegenerateInputs, "all base inputs are identical");
  }
  const Eigen::ArrayXd s = normalized_pair_distances(base_inputs, sd);
  const double target = 0.5 * (options.band_lo + options.band_hi);

  // Mean correlation increases monotonically with q.
  double q = 0.0;
  bool reached = true;
  const double at_min = mean_correlation_at(s, options.q_min);
  const double at_max = mean_correlation_at(s, options.q_max);
  if (at_max < options.band_lo) {
    q = options.q_max;
    reached = false;
  } else if (at_min > options.band_hi) {
    q = options.q_min;
    reached = false;
  } else {
    // Bisection on log q, accelerated by Newton steps that stay inside the bracket.
    double lo = std::log(options.q_min);
    double hi = std::log(options.q_max);
    double x = std::clamp(0.5 * std::log(s.mean() / -std::log(target)), lo, hi);
    for (int it = 0; it < options.max_iterations && hi - lo > 1e-12; ++it) {
      const Eigen::ArrayXd scaled = s * std::exp(-2.0 * x);
      const Eigen::ArrayXd c = (-scaled).exp();
      const double g = c.mean() - target;
      if (std::abs(g) < 1e-14) break;
      if (g < 0.0) {
        lo = x;
      } else {
        hi = x;
      }
      const double slope = 2.0 * (c * scaled).mean();
      const double next = slope > 0.0 ? x - g / slope : lo;
      x = (next > lo && next < hi) ? next : 0.5 * (lo + hi);
    }
    q = std::exp(x);
  }
  KernelConfig cfg = make_kernel(sd, q, 1.0);
  cfg.band_reached = reached;
  cfg.mean_correlation = mean_correlation_at(s, q);
  return cfg;
}

Matrix correlation_matrix(const KernelConfig& cfg, const Matrix& inputs) {
  require_dim(inputs.cols(), cfg.alpha.size(), "input dimension");
  const Eigen::Index k = inputs.rows();
  const Matrix s = scaled_columns(inputs, cfg.alpha);
  Matrix r(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    r(a, a) = 1.0;
    for (Eigen::Index b = a + 1; b < k; ++b) {
      const double c = std::exp(-(s.col(a) - s.col(b)).squaredNorm());
      r(a, b) = c;
      r(b, a) = c;
    }
  }
  return r;
}

namespace {

Matrix checked_inputs(Matrix inputs, const Matrix& targets, const KernelConfig& kernel) {
  if (inputs.rows() < 2) {
    throw Error(ErrorCode::kTooFewPoints, "inverse GP needs K >= 2 base points");
  }
  require_dim(inputs.rows(), targets.rows(), "base input/target count");
  require_dim(inputs.cols(), kernel.alpha.size(), "kernel input dimension");
  if (targets.cols() < 1) {
    throw Error(ErrorCode::kDimensionMismatch, "targets have no columns");
  }
  return inputs;
}

}  // namespace

InverseGpSurrogate::InverseGpSurrogate(Matrix inputs, Matrix targets, KernelConfig kernel,
                                       ProcessVariance variance_mode)
    : inputs_(checked_inputs(std::move(inputs), targets, kernel)),
      targets_(std::move(targets)),
      mean_(targets_.colwise().mean().transpose()),
      kernel_(std::move(kernel)),
      variance_mode_(variance_mode),
      process_variance_(targets_.cols()),
      factor_(correlation_matrix(kernel_, inputs_)),
      scaled_inputs_(scaled_columns(inputs_, kernel_.alpha)) {
  const double k = static_cast<double>(targets_.rows());
  if (variance_mode_ == ProcessVariance::kTargetVariance) {
    for (Eigen::Index j = 0; j < targets_.cols(); ++j) {
      process_variance_[j] = (targets_.col(j).array() - mean_[j]).square().sum() / (k - 1.0);
    }
  } else {
    const Vector sd = column_sd(inputs_);
    double acc = 0.0;
    Eigen::Index active = 0;
    for (Eigen::Index i = 0; i < sd.size(); ++i) {
      if (kernel_.alpha[i] != 0.0) {
        acc += sd[i] * sd[i];
        ++active;
      }
    }
    process_variance_.setConstant(active > 0 ? acc / static_cast<double>(active) : 0.0);
  }
  const Matrix centered = targets_.rowwise() - mean_.transpose();
  weights_ = factor_.solve(centered);
}

Prediction InverseGpSurrogate::predict(const Vector& query) const {
  require_dim(query.size(), inputs_.cols(), "query dimension");
  const Vector r = correlations_to(query);
  Prediction out;
  out.mean = mean_ + weights_.transpose() * r;
  const Vector v = factor_.solve_lower(r);
  const double reduction = 1.0 - v.squaredNorm();
  out.variance = process_variance_ * reduction;
  for (Eigen::Index j = 0; j < out.variance.size(); ++j) {
    if (out.variance[j] < -1e-8) {
      throw Error(ErrorCode::kNumericalBreakdown,
                  "negative predictive variance " + std::to_string(out.variance[j]));
    }
    if (out.variance[j] < 0.0) out.variance[j] = 0.0;
  }
  return out;
}

Vector InverseGpSurrogate::predict_mean(const Vector& query) const {
  require_dim(query.size(), inputs_.cols(), "query dimension");
  return mean_ + weights_.transpose() * correlations_to(query);
}

Vector InverseGpSurrogate::correlations_to(const Vector& query) const {
  const Vector q = query.cwiseProduct(kernel_.alpha.cwiseSqrt());
  return (-sq_distances_to(scaled_inputs_, q).array()).exp().matrix();
}

KernelConfig InverseGpSurrogate::kernel_for(Eigen::Index j) const {
  KernelConfig k = kernel_;
  k.sigma_b2 = process_variance_[j];
  return k;
}

InverseGpSurrogate condition(const Matrix& base_inputs, const Matrix& base_targets,
                             const KernelConfig& cfg, ProcessVariance variance_mode) {
  return InverseGpSurrogate(base_inputs, base_targets, cfg, variance_mode);
}

Prediction predict(const InverseGpSurrogate& s, const Vector& query) { return s.predict(query); }

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j.at(i).size()) != cols) {
      throw Error(ErrorCode::kDimensionMismatch, "ragged matrix in surrogate JSON");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j.at(i).at(c).get<double>();
  }
  return m;
}

Vector vector_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

nlohmann::json to_json(const InverseGpSurrogate& s) {
  const auto& k = s.kernel();
  return {
      {"schema", kSurrogateSchema},
      {"inputs", matrix_to_json(s.inputs())},
      {"targets", matrix_to_json(s.targets())},
      {"kernel",
       {{"q_scale", k.q_scale},
        {"input_sd", std::vector<double>(k.input_sd.data(), k.input_sd.data() + k.input_sd.size())},
        {"band_reached", k.band_reached},
        {"mean_correlation", k.mean_correlation}}},
      {"process_variance_mode",
       s.variance_mode() == ProcessVariance::kTargetVariance ? "target" : "input"},
  };
}

InverseGpSurrogate surrogate_from_json(const nlohmann::json& j) {
  if (j.value("schema", std::string{}) != kSurrogateSchema) {
    throw Error(ErrorCode::kInvalidConfig, "surrogate JSON has wrong or missing schema tag");
  }
  const auto& kj = j.at("kernel");
  KernelConfig cfg = make_kernel(vector_from_json(kj.at("input_sd")), kj.at("q_scale").get<double>());
  cfg.band_reached = kj.value("band_reached", true);
  cfg.mean_correlation = kj.value("mean_correlation", 0.0);
  const auto mode = j.value("process_variance_mode", std::string("target")) == "input"
                        ? ProcessVariance::kInputVariance
                        : ProcessVariance::kTargetVariance;
  return InverseGpSurrogate(matrix_from_json(j.at("inputs")), matrix_from_json(j.at("targets")),
                            std::move(cfg), mode);
}

}  // namespace igpmc::gp
