#include "igpmc/models.hpp"

#include <cmath>
#include <limits>

namespace igpmc::models {

std::vector<std::string> ForwardModel::output_names() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < output_count(); ++i) out.push_back("y" + std::to_string(i + 1));
  return out;
}

Vector CountingModel::evaluate(const Vector& m) const {
  ++calls_;
  return inner_->evaluate(m);
}

double bimodal_eval(double m) { return m * m; }

Vector BimodalModel::evaluate(const Vector& m) const {
  if (m.size() != 1) {
    throw Error(ErrorCode::kDimensionMismatch, "bimodal model takes one parameter");
  }
  Vector out(1);
  out[0] = bimodal_eval(m[0]);
  return out;
}

LinearModel::LinearModel(Matrix g, Vector b) : g_(std::move(g)), b_(std::move(b)) {
  if (b_.size() != g_.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "offset length must equal matrix rows");
  }
}

Vector LinearModel::evaluate(const Vector& m) const {
  if (m.size() != g_.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "linear model parameter length");
  }
  return g_ * m + b_;
}

double ParameterPrior::lower() const {
  if (const auto* u = std::get_if<UniformPrior>(&dist)) return u->lo;
  return -std::get<TruncatedNormalPrior>(dist).bound;
}

double ParameterPrior::upper() const {
  if (const auto* u = std::get_if<UniformPrior>(&dist)) return u->hi;
  return std::get<TruncatedNormalPrior>(dist).bound;
}

double ParameterPrior::sample(numerics::RngStream& rng) const {
  if (const auto* u = std::get_if<UniformPrior>(&dist)) return rng.uniform(u->lo, u->hi);
  const double b = std::get<TruncatedNormalPrior>(dist).bound;
  for (;;) {
    const double x = rng.normal();
    if (std::abs(x) <= b) return x;
  }
}

double ParameterPrior::log_density(double x) const {
  if (x < lower() || x > upper()) return -std::numeric_limits<double>::infinity();
  if (std::holds_alternative<UniformPrior>(dist)) return 0.0;
  return -0.5 * x * x;
}

PriorSpec::PriorSpec(std::vector<ParameterPrior> params) : params_(std::move(params)) {
  for (const auto& p : params_) {
    if (const auto* u = std::get_if<UniformPrior>(&p.dist); u && !(u->lo < u->hi)) {
      throw Error(ErrorCode::kInvalidConfig, "uniform prior for " + p.name + " needs lo < hi");
    }
    if (const auto* t = std::get_if<TruncatedNormalPrior>(&p.dist); t && !(t->bound > 0.0)) {
      throw Error(ErrorCode::kInvalidConfig, "truncation bound for " + p.name + " must be positive");
    }
  }
}

PriorSpec PriorSpec::uniform_box(const std::vector<std::string>& names, const Vector& lo, const Vector& hi) {
  if (static_cast<Eigen::Index>(names.size()) != lo.size() || lo.size() != hi.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "prior box dimensions disagree");
  }
  std::vector<ParameterPrior> params;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    params.push_back({names[i], UniformPrior{lo[k], hi[k]}});
  }
  return PriorSpec(std::move(params));
}

PriorSpec PriorSpec::truncated_normal(std::size_t n, double bound, const std::string& prefix) {
  std::vector<ParameterPrior> params;
  for (std::size_t i = 0; i < n; ++i) {
    params.push_back({prefix + std::to_string(i + 1), TruncatedNormalPrior{bound}});
  }
  return PriorSpec(std::move(params));
}

std::vector<std::string> PriorSpec::names() const {
  std::vector<std::string> out;
  for (const auto& p : params_) out.push_back(p.name);
  return out;
}

Vector PriorSpec::sample(numerics::RngStream& rng) const {
  Vector m(static_cast<Eigen::Index>(params_.size()));
  for (std::size_t i = 0; i < params_.size(); ++i) m[static_cast<Eigen::Index>(i)] = params_[i].sample(rng);
  return m;
}

bool PriorSpec::contains(const Vector& m) const {
  if (m.size() != static_cast<Eigen::Index>(params_.size())) return false;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const double x = m[static_cast<Eigen::Index>(i)];
    if (!(x >= params_[i].lower() && x <= params_[i].upper())) return false;
  }
  return true;
}

Vector PriorSpec::clamp(const Vector& m) const {
  Vector out = m;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& x = out[static_cast<Eigen::Index>(i)];
    if (std::isnan(x)) {
      x = 0.5 * (params_[i].lower() + params_[i].upper());
    }
    x = std::clamp(x, params_[i].lower(), params_[i].upper());
  }
  return out;
}

Vector PriorSpec::lower() const {
  Vector out(static_cast<Eigen::Index>(params_.size()));
  for (std::size_t i = 0; i < params_.size(); ++i) out[static_cast<Eigen::Index>(i)] = params_[i].lower();
  return out;
}

Vector PriorSpec::upper() const {
  Vector out(static_cast<Eigen::Index>(params_.size()));
  for (std::size_t i = 0; i < params_.size(); ++i) out[static_cast<Eigen::Index>(i)] = params_[i].upper();
  return out;
}

Vector PriorSpec::ranges() const { return upper() - lower(); }

double PriorSpec::log_density(const Vector& m) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < params_.size(); ++i) acc += params_[i].log_density(m[static_cast<Eigen::Index>(i)]);
  return acc;
}

void MeasurementSet::validate() const {
  if (d.size() < 1) {
    throw Error(ErrorCode::kInvalidConfig, "measurement set is empty");
  }
  if (sigma2.size() != d.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "sigma2 length must match d");
  }
  if (error_known && (sigma2.array() <= 0.0).any()) {
    throw Error(ErrorCode::kInvalidConfig, "error variances must be positive");
  }
}

Vector noise_variance(const NoiseSpec& noise, const Vector& f) {
  return std::visit(
      [&](const auto& n) -> Vector {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, AbsoluteNoise>) {
          return Vector::Constant(f.size(), n.sigma * n.sigma);
        } else if constexpr (std::is_same_v<T, RelativeNoise>) {
          Vector s = (n.fraction * f.array().abs()).max(n.floor);
          return s.array().square();
        } else {
          if (n.sigma.size() != f.size()) {
            throw Error(ErrorCode::kDimensionMismatch, "noise sigma length must match outputs");
          }
          return n.sigma.array().square();
        }
      },
      noise);
}

MeasurementSet make_measurements(const ForwardModel& model, const Vector& m_true,
                                 const NoiseSpec& noise, numerics::RngStream& rng) {
  const Vector f = model.evaluate(m_true);
  MeasurementSet ms;
  ms.sigma2 = noise_variance(noise, f);
  ms.d = numerics::mvn_sample_diag(f, ms.sigma2, rng);
  ms.error_known = true;
  return ms;
}

}  // namespace igpmc::models
