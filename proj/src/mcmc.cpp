#include "igpmc/mcmc.hpp"

#include <cmath>
#include <numbers>

namespace igpmc::mcmc {

LikelihoodSpec LikelihoodSpec::homoscedastic(double sigma2) {
  return {LikelihoodKind::kHomoscedastic, Vector::Constant(1, sigma2)};
}

LikelihoodSpec LikelihoodSpec::heteroscedastic(Vector sigma2) {
  return {LikelihoodKind::kHeteroscedastic, std::move(sigma2)};
}

LikelihoodSpec LikelihoodSpec::integrated() { return {LikelihoodKind::kIntegrated, Vector()}; }

LikelihoodSpec LikelihoodSpec::from_measurements(const MeasurementSet& ms) {
  if (ms.sigma2.size() > 0 && (ms.sigma2.array() == ms.sigma2[0]).all()) {
    return homoscedastic(ms.sigma2[0]);
  }
  return heteroscedastic(ms.sigma2);
}

void LikelihoodSpec::validate(std::size_t n_d) const {
  switch (kind) {
    case LikelihoodKind::kHomoscedastic:
      if (sigma2.size() != 1) throw Error(ErrorCode::kInvalidConfig, "homoscedastic likelihood needs one sigma2");
      break;
    case LikelihoodKind::kHeteroscedastic:
      if (sigma2.size() != static_cast<Eigen::Index>(n_d)) {
        throw Error(ErrorCode::kDimensionMismatch, "heteroscedastic sigma2 length must equal n_d");
      }
      break;
    case LikelihoodKind::kIntegrated:
      if (sigma2.size() != 0) throw Error(ErrorCode::kInvalidConfig, "integrated likelihood takes no sigma2");
      return;
  }
  if (!(sigma2.array() > 0.0).all()) {
    throw Error(ErrorCode::kNonPositiveVariance, "likelihood variances must be positive");
  }
}

double log_likelihood(const Vector& f, const MeasurementSet& ms, const LikelihoodSpec& spec) {
  if (f.size() != ms.d.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "output length differs from measurements");
  }
  spec.validate(static_cast<std::size_t>(f.size()));
  const Eigen::ArrayXd r = (f - ms.d).array();
  const auto n = static_cast<double>(f.size());
  constexpr double kLog2Pi = 1.8378770664093453;
  switch (spec.kind) {
    case LikelihoodKind::kHomoscedastic: {
      const double s2 = spec.sigma2[0];
      return -0.5 * r.square().sum() / s2 - 0.5 * n * (kLog2Pi + std::log(s2));
    }
    case LikelihoodKind::kHeteroscedastic: {
      const Eigen::ArrayXd s2 = spec.sigma2.array();
      return -0.5 * (r.square() / s2).sum() - 0.5 * (kLog2Pi + s2.log()).sum();
    }
    case LikelihoodKind::kIntegrated:
      return -0.5 * n * std::log(std::max(r.square().sum(), std::numeric_limits<double>::min()));
  }
  return 0.0;
}

void McmcConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kInvalidConfig, msg); };
  if (n_chains < 2) fail("n_chains must be at least 2");
  if (thin < 1) fail("thin must be at least 1");
  if (!(crossover > 0.0 && crossover <= 1.0)) fail("crossover must lie in (0, 1]");
  if (!(gamma_scale >= 0.0)) fail("gamma_scale must be non-negative");
  if (!(jump_probability >= 0.0 && jump_probability <= 1.0)) fail("jump_probability must lie in [0, 1]");
  if (!(jitter >= 0.0)) fail("jitter must be non-negative");
  if (archive_factor < 2) fail("archive_factor must be at least 2");
  if (budget < n_chains * 10 || budget < n_chains * archive_factor) {
    fail("budget must cover the initial archive");
  }
  if (!(burn_in >= 0.0 && burn_in < 1.0)) fail("burn_in must lie in [0, 1)");
}

double log_accept_ratio(const ChainState& current, const ChainState& proposal) {
  return (proposal.log_like + proposal.log_prior) - (current.log_like + current.log_prior);
}

void de_step(SamplerState& state, const ForwardModel& model, const PriorSpec& prior,
             const MeasurementSet& ms, const LikelihoodSpec& spec, const McmcConfig& cfg,
             RngStream& rng, std::size_t eval_cap) {
  const std::size_t n = state.chains.size();
  if (state.archive.size() < 2 * n) {
    throw Error(ErrorCode::kInvalidConfig, "archive must hold at least 2 * n_chains states");
  }
  const Vector range = prior.ranges();
  const auto dim = range.size();

  std::vector<Vector> proposals(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Eigen::Index> dims;
    for (Eigen::Index j = 0; j < dim; ++j) {
      if (rng.uniform() < cfg.crossover) dims.push_back(j);
    }
    if (dims.empty()) dims.push_back(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(dim))));
    const bool jump = rng.uniform() < cfg.jump_probability;
    const double gamma =
        jump ? 1.0 : cfg.gamma_scale * 2.38 / std::sqrt(2.0 * static_cast<double>(dims.size()));
    const std::size_t a = rng.index(state.archive.size());
    std::size_t b = rng.index(state.archive.size() - 1);
    if (b >= a) ++b;

    Vector x = state.chains[i].x;
    for (Eigen::Index j : dims) {
      x[j] += gamma * (state.archive[a][j] - state.archive[b][j]) + cfg.jitter * range[j] * rng.normal();
    }
    proposals[i] = std::move(x);
  }

  std::vector<std::size_t> to_eval;
  for (std::size_t i = 0; i < n && to_eval.size() < eval_cap; ++i) {
    if (prior.contains(proposals[i])) to_eval.push_back(i);
  }
  std::vector<double> ll(to_eval.size());
  numerics::parallel_for(to_eval.size(), cfg.threads, [&](std::size_t k) {
    ll[k] = log_likelihood(model.evaluate(proposals[to_eval[k]]), ms, spec);
  });
  state.evals += to_eval.size();
  state.proposed += n;

  for (std::size_t k = 0; k < to_eval.size(); ++k) {
    const std::size_t i = to_eval[k];
    ChainState cand{proposals[i], ll[k], prior.log_density(proposals[i])};
    const double ratio = log_accept_ratio(state.chains[i], cand);
    const double u = rng.uniform();
    if (ratio >= 0.0 || std::log(u) < ratio) {
      state.chains[i] = std::move(cand);
      ++state.accepted;
    }
  }

  ++state.generation;
  if (state.generation % cfg.thin == 0) {
    for (const auto& c : state.chains) state.archive.push_back(c.x);
  }
}

Vector gelman_rubin(const std::vector<Matrix>& chains) {
  if (chains.size() < 2) throw Error(ErrorCode::kTooFewSamples, "need at least two chains");
  const Eigen::Index n = chains.front().rows();
  const Eigen::Index dim = chains.front().cols();
  if (n < 10) throw Error(ErrorCode::kTooFewSamples, "need at least 10 samples per chain");
  for (const auto& c : chains) {
    if (c.rows() != n || c.cols() != dim) {
      throw Error(ErrorCode::kDimensionMismatch, "chains must share length and dimension");
    }
  }
  const auto m = static_cast<double>(chains.size());
  const auto nn = static_cast<double>(n);
  Vector out(dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    std::vector<double> means;
    double w = 0.0;
    for (const auto& c : chains) {
      const double mu = c.col(j).mean();
      means.push_back(mu);
      w += (c.col(j).array() - mu).square().sum() / (nn - 1.0);
    }
    w /= m;
    const double grand = numerics::mean(means);
    double b = 0.0;
    for (double mu : means) b += (mu - grand) * (mu - grand);
    b *= nn / (m - 1.0);
    const double v = (nn - 1.0) / nn * w + b / nn;
    if (w > 0.0) {
      out[j] = v / w;
    } else {
      out[j] = b > 0.0 ? std::numeric_limits<double>::infinity() : (nn - 1.0) / nn;
    }
  }
  return out;
}

McmcResult run_mcmc(const PriorSpec& prior, const ForwardModel& model, const MeasurementSet& ms,
                    const LikelihoodSpec& spec, const McmcConfig& cfg) {
  cfg.validate();
  spec.validate(ms.size());
  if (model.parameter_count() != prior.size() || model.output_count() != ms.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "model, prior and measurement sizes disagree");
  }
  RngStream rng(cfg.seed, 10);
  const std::size_t n = cfg.n_chains;

  SamplerState state;
  const std::size_t n_archive = cfg.archive_factor * n;
  for (std::size_t i = 0; i < n_archive; ++i) state.archive.push_back(prior.sample(rng));
  std::vector<double> ll0(n_archive);
  numerics::parallel_for(n_archive, cfg.threads, [&](std::size_t i) {
    ll0[i] = log_likelihood(model.evaluate(state.archive[i]), ms, spec);
  });
  state.evals = n_archive;
  for (std::size_t i = 0; i < n; ++i) {
    state.chains.push_back({state.archive[i], ll0[i], prior.log_density(state.archive[i])});
  }

  McmcResult result;
  result.parameter_names = prior.names();
  result.eval_count = 0;
  for (std::size_t i = 0; i < n_archive; ++i) {
    if (ll0[i] > result.best_log_like) {
      result.best_log_like = ll0[i];
      result.best_m = state.archive[i];
    }
  }

  std::vector<std::vector<Vector>> history(n);
  result.log_like.assign(n, {});
  const std::size_t max_generations = 100 * cfg.budget;
  while (state.evals < cfg.budget && state.generation < max_generations) {
    de_step(state, model, prior, ms, spec, cfg, rng, cfg.budget - state.evals);
    for (std::size_t i = 0; i < n; ++i) {
      history[i].push_back(state.chains[i].x);
      result.log_like[i].push_back(state.chains[i].log_like);
      if (state.chains[i].log_like > result.best_log_like) {
        result.best_log_like = state.chains[i].log_like;
        result.best_m = state.chains[i].x;
      }
    }
  }

  const auto dim = static_cast<Eigen::Index>(prior.size());
  const std::size_t g = state.generation;
  result.burn_in_generations = static_cast<std::size_t>(std::floor(cfg.burn_in * static_cast<double>(g)));
  const std::size_t kept = g - result.burn_in_generations;
  result.samples.resize(static_cast<Eigen::Index>(kept * n), dim);
  std::vector<Matrix> post(n, Matrix(static_cast<Eigen::Index>(kept), dim));
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Matrix full(static_cast<Eigen::Index>(g), dim);
    for (std::size_t t = 0; t < g; ++t) full.row(static_cast<Eigen::Index>(t)) = history[i][t].transpose();
    for (std::size_t t = result.burn_in_generations; t < g; ++t) {
      result.samples.row(row++) = history[i][t].transpose();
      result.sample_chain.push_back(static_cast<int>(i));
    }
    post[i] = full.bottomRows(static_cast<Eigen::Index>(kept));
    result.chains.push_back(std::move(full));
  }

  result.mean = result.samples.colwise().mean().transpose();
  result.sd.resize(dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    std::vector<double> col(result.samples.col(j).data(), result.samples.col(j).data() + result.samples.rows());
    result.sd[j] = numerics::stddev(col);
  }
  if (kept >= 10) {
    result.rhat = gelman_rubin(post);
  } else {
    result.rhat = Vector::Constant(dim, std::numeric_limits<double>::quiet_NaN());
  }
  result.eval_count = state.evals;
  result.acceptance_rate =
      state.proposed ? static_cast<double>(state.accepted) / static_cast<double>(state.proposed) : 0.0;
  return result;
}

}  // namespace igpmc::mcmc
