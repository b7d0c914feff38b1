#include "igpmc/estimator.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numeric>
#include <sstream>

namespace igpmc::estimator {

namespace {

std::string format_vector(const Vector& m) {
  std::ostringstream os;
  os.precision(17);
  os << '[';
  for (Eigen::Index i = 0; i < m.size(); ++i) os << (i ? ", " : "") << m[i];
  os << ']';
  return os.str();
}

Vector evaluate_checked(const ForwardModel& model, const Vector& m) {
  Vector f;
  try {
    f = model.evaluate(m);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kForwardModelFailure, "at m = " + format_vector(m) + ": " + e.what());
  }
  if (f.size() != static_cast<Eigen::Index>(model.output_count()) || !f.allFinite()) {
    throw Error(ErrorCode::kForwardModelFailure,
                "non-finite or mis-sized output at m = " + format_vector(m));
  }
  return f;
}

// Evaluates a batch; results land in index order regardless of thread count.
std::vector<Vector> evaluate_batch(const ForwardModel& model, const std::vector<Vector>& ms,
                                   std::size_t threads) {
  std::vector<Vector> out(ms.size());
  numerics::parallel_for(ms.size(), threads,
                         [&](std::size_t i) { out[i] = evaluate_checked(model, ms[i]); });
  return out;
}

Matrix rows_of(const BasePointPool& pool, const std::vector<std::size_t>& idx, bool outputs) {
  const auto& first = outputs ? pool.entries[idx.front()].f : pool.entries[idx.front()].m;
  Matrix out(static_cast<Eigen::Index>(idx.size()), first.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto& e = pool.entries[idx[r]];
    out.row(static_cast<Eigen::Index>(r)) = (outputs ? e.f : e.m).transpose();
  }
  return out;
}

// Inverse GP for one group of base points, fed perturbed outputs.
gp::InverseGpSurrogate build_group(const BasePointPool& pool, const std::vector<std::size_t>& idx,
                                   const MeasurementSet& ms, const IgpmcConfig& cfg,
                                   RngStream& rng) {
  Matrix inputs = rows_of(pool, idx, true);
  const Matrix targets = rows_of(pool, idx, false);
  const Vector zero = Vector::Zero(inputs.cols());
  if (cfg.perturb_base_outputs) {
    for (Eigen::Index r = 0; r < inputs.rows(); ++r) {
      inputs.row(r) += numerics::mvn_sample_diag(zero, ms.sigma2, rng).transpose();
    }
  }
  const gp::KernelConfig kernel = gp::auto_tune(inputs, cfg.tune);
  return gp::condition(inputs, targets, kernel, cfg.process_variance);
}

Vector window_sd(const BasePointPool& pool, std::size_t window) {
  if (pool.entries.empty()) return {};
  const std::size_t n = std::min(window, pool.size());
  const auto dim = pool.entries.front().m.size();
  Vector out(dim);
  std::vector<double> col(n);
  for (Eigen::Index j = 0; j < dim; ++j) {
    for (std::size_t k = 0; k < n; ++k) col[k] = pool.entries[pool.size() - n + k].m[j];
    out[j] = numerics::stddev(col);
  }
  return out;
}

void refresh_error_stats(BasePointPool& pool, MeasurementSet& ms, const IgpmcConfig& cfg) {
  const auto selected = select_base_points(pool, std::min(cfg.k_select, pool.size()));
  const Vector s = estimate_error_stats(pool, selected, ms.d, cfg.error_model);
  ms.sigma2 = s.array().square();
  pool.rescore(ms);
}

}  // namespace

std::size_t BasePointPool::best_index() const {
  if (entries.empty()) throw Error(ErrorCode::kEmptyInput, "pool is empty");
  std::size_t best = 0;
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].D < entries[best].D) best = i;
  }
  return best;
}

double BasePointPool::min_D() const { return entries[best_index()].D; }

void BasePointPool::rescore(const MeasurementSet& ms) {
  for (auto& e : entries) e.D = weighted_distance(e.f, ms);
}

void IgpmcConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kInvalidConfig, msg); };
  if (n_init < 2) fail("n_init must be at least 2");
  if (k_select < 2 || k_select > n_init) fail("k_select must lie in [2, n_init]");
  if (cluster_count_initial < 1) fail("cluster_count_initial must be at least 1");
  if (min_cluster_size < 1) fail("min_cluster_size must be at least 1");
  if (max_evals < n_init) fail("max_evals must be at least n_init");
  if (m_propagate < 100) fail("m_propagate must be at least 100");
  if (redraw_attempts < 1) fail("redraw_attempts must be at least 1");
  if (!(tune.band_lo > 0.0 && tune.band_lo < tune.band_hi && tune.band_hi < 1.0)) {
    fail("correlation band must satisfy 0 < lo < hi < 1");
  }
  if (!(tune.q_min > 0.0 && tune.q_min < tune.q_max)) fail("q range must satisfy 0 < q_min < q_max");
}

double weighted_distance(const Vector& f, const MeasurementSet& ms) {
  if (f.size() != ms.d.size() || ms.sigma2.size() != ms.d.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "output, measurement and variance lengths differ");
  }
  return 0.5 * ((f - ms.d).array().square() / ms.sigma2.array()).sum();
}

BasePointPool init_pool(const PriorSpec& prior, const ForwardModel& model, std::size_t n_init,
                        RngStream& rng, const MeasurementSet& ms, std::size_t threads) {
  if (n_init < 2) throw Error(ErrorCode::kInvalidConfig, "n_init must be at least 2");
  std::vector<Vector> draws;
  draws.reserve(n_init);
  for (std::size_t i = 0; i < n_init; ++i) draws.push_back(prior.sample(rng));
  const auto outputs = evaluate_batch(model, draws, threads);

  BasePointPool pool;
  pool.entries.reserve(n_init);
  for (std::size_t i = 0; i < n_init; ++i) {
    pool.entries.push_back({draws[i], outputs[i], weighted_distance(outputs[i], ms), 0, -1});
  }
  pool.eval_count = n_init;
  return pool;
}

std::vector<std::size_t> select_base_points(const BasePointPool& pool, std::size_t k) {
  if (k > pool.size()) {
    throw Error(ErrorCode::kInvalidConfig, "cannot select more base points than the pool holds");
  }
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return pool.entries[a].D < pool.entries[b].D; });
  idx.resize(k);
  return idx;
}

Vector estimate_error_stats(const BasePointPool& pool, std::size_t k_select, const Vector& d,
                            ErrorModel model) {
  return estimate_error_stats(pool, select_base_points(pool, k_select), d, model);
}

Vector estimate_error_stats(const BasePointPool& pool, const std::vector<std::size_t>& selected,
                            const Vector& d, ErrorModel model) {
  if (selected.size() < 2) {
    throw Error(ErrorCode::kDegenerateResiduals, "need at least two selected base points");
  }
  const Matrix f = rows_of(pool, selected, true);
  if (f.cols() != d.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "measurement length differs from model outputs");
  }
  const Matrix r = f.rowwise() - d.transpose();
  const Vector floor = 1e-12 * d.array().abs() + 1e-12;
  const auto k = static_cast<double>(r.rows());

  Vector sigma(d.size());
  switch (model) {
    case ErrorModel::kPerObservable: {
      const Eigen::RowVectorXd mu = r.colwise().mean();
      sigma = ((r.rowwise() - mu).array().square().colwise().sum() / (k - 1.0)).sqrt().transpose();
      break;
    }
    case ErrorModel::kPooled: {
      const double mu = r.mean();
      const double n = static_cast<double>(r.size());
      const double sd = std::sqrt((r.array() - mu).square().sum() / (n - 1.0));
      if (!(sd > 0.0)) throw Error(ErrorCode::kDegenerateResiduals, "all residuals identical");
      sigma.setConstant(sd);
      break;
    }
    case ErrorModel::kRelative: {
      const double num = r.array().square().sum();
      const double den = f.array().square().sum();
      if (!(num > 0.0) || !(den > 0.0)) {
        throw Error(ErrorCode::kDegenerateResiduals, "residuals or outputs vanish identically");
      }
      const double c = std::sqrt(num / den);
      sigma = c * f.colwise().mean().transpose().array().abs();
      break;
    }
  }
  return sigma.cwiseMax(floor);
}

SystemBuild build_inverse_systems(const BasePointPool& pool, const MeasurementSet& ms,
                                  const IgpmcConfig& cfg, const PriorSpec& prior, RngStream& rng) {
  SystemBuild out;
  out.selected = select_base_points(pool, std::min(cfg.k_select, pool.size()));
  const auto& sel = out.selected;

  const Matrix points = rows_of(pool, sel, false);
  const std::size_t groups = std::min(cfg.cluster_count_initial, sel.size());
  cluster::ClusterAssignment a = cluster::agglomerative_cluster(points, groups, prior.ranges());
  std::vector<double> d_sel(sel.size());
  for (std::size_t i = 0; i < sel.size(); ++i) d_sel[i] = pool.entries[sel[i]].D;
  cluster::attach_scores(a, d_sel);
  out.groups_formed = a.group_count();

  std::vector<int> kept = cluster::prune_groups(a, cfg.min_cluster_size, d_sel, cfg.prune_rule);
  std::erase_if(kept, [&](int g) { return a.group_sizes[static_cast<std::size_t>(g)] < 2; });

  if (kept.empty()) {
    // Every surviving group is a singleton: fall back to one system on all selected points.
    out.systems.push_back({build_group(pool, sel, ms, cfg, rng), 0, sel.size(),
                           numerics::mean(d_sel)});
    return out;
  }
  for (int g : kept) {
    std::vector<std::size_t> idx;
    for (std::size_t member : a.members(g)) idx.push_back(sel[member]);
    out.systems.push_back({build_group(pool, idx, ms, cfg, rng), g, idx.size(),
                           a.group_mean_D[static_cast<std::size_t>(g)]});
  }
  return out;
}

IterationReport iterate(BasePointPool& pool, MeasurementSet& ms, const IgpmcConfig& cfg,
                        const PriorSpec& prior, const ForwardModel& model, RngStream& rng,
                        int iteration) {
  if (pool.entries.empty()) throw Error(ErrorCode::kEmptyInput, "pool is empty");
  if (pool.eval_count >= cfg.max_evals) {
    throw Error(ErrorCode::kBudgetExhausted, "evaluation budget already spent");
  }
  if (!ms.error_known) refresh_error_stats(pool, ms, cfg);

  const SystemBuild build = build_inverse_systems(pool, ms, cfg, prior, rng);
  const Vector zero = Vector::Zero(ms.d.size());
  const Vector d_star = ms.d + numerics::mvn_sample_diag(zero, ms.sigma2, rng);

  const std::size_t remaining = cfg.max_evals - pool.eval_count;
  const std::size_t p = std::min(build.systems.size(), remaining);
  std::vector<Vector> proposals;
  proposals.reserve(p);
  for (std::size_t s = 0; s < p; ++s) {
    const auto& gp = build.systems[s].surrogate;
    Vector m_hat = gp.predict_mean(d_star);
    if (cfg.out_of_support == OutOfSupport::kRedraw) {
      for (int attempt = 0; attempt < cfg.redraw_attempts && !prior.contains(m_hat); ++attempt) {
        m_hat = gp.predict_mean(ms.d + numerics::mvn_sample_diag(zero, ms.sigma2, rng));
      }
    }
    proposals.push_back(prior.clamp(m_hat));
  }

  const auto outputs = evaluate_batch(model, proposals, cfg.threads);
  for (std::size_t s = 0; s < p; ++s) {
    pool.entries.push_back({proposals[s], outputs[s], weighted_distance(outputs[s], ms), iteration,
                            build.systems[s].group});
  }
  pool.eval_count += p;
  return {build.groups_formed, build.systems.size(), p};
}

void propagate(const std::vector<InverseSystem>& systems, const MeasurementSet& ms,
               const PriorSpec& prior, std::size_t m_propagate, RngStream& rng,
               EstimationResult& result) {
  const Vector zero = Vector::Zero(ms.d.size());
  std::vector<Vector> realizations;
  realizations.reserve(m_propagate);
  for (std::size_t r = 0; r < m_propagate; ++r) {
    realizations.push_back(ms.d + numerics::mvn_sample_diag(zero, ms.sigma2, rng));
  }

  const auto n_m = static_cast<Eigen::Index>(prior.size());
  const auto total = static_cast<Eigen::Index>(m_propagate * systems.size());
  result.samples.resize(total, n_m);
  result.sample_variance.resize(total, n_m);
  result.sample_cluster.assign(static_cast<std::size_t>(total), 0);
  Eigen::Index row = 0;
  for (const auto& sys : systems) {
    for (const auto& d_star : realizations) {
      Vector mean;
      Vector var;
      try {
        const gp::Prediction pr = sys.surrogate.predict(d_star);
        mean = pr.mean;
        var = pr.variance;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNumericalBreakdown) throw;
        mean = sys.surrogate.predict_mean(d_star);
        var = Vector::Constant(n_m, std::numeric_limits<double>::quiet_NaN());
      }
      result.samples.row(row) = prior.clamp(mean).transpose();
      result.sample_variance.row(row) = var.transpose();
      result.sample_cluster[static_cast<std::size_t>(row)] = sys.group;
      ++row;
    }
  }
  result.kept_clusters = systems.size();
}

void summarize(EstimationResult& result) {
  const Matrix& s = result.samples;
  const auto n_m = s.cols();
  result.mean.resize(n_m);
  result.sd.resize(n_m);
  result.map.resize(n_m);
  for (Eigen::Index j = 0; j < n_m; ++j) {
    std::vector<double> col(s.col(j).data(), s.col(j).data() + s.rows());
    result.mean[j] = numerics::mean(col);
    result.sd[j] = numerics::stddev(col);
    try {
      result.map[j] = numerics::kde_mode(numerics::make_kde(std::move(col)));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kZeroBandwidth) throw;
      result.map[j] = result.mean[j];
    }
  }
}

EstimationResult run(const PriorSpec& prior, const ForwardModel& model, MeasurementSet ms,
                     const IgpmcConfig& cfg) {
  cfg.validate();
  if (!ms.error_known && ms.sigma2.size() != ms.d.size()) {
    ms.sigma2 = Vector::Ones(ms.d.size());
  }
  ms.validate();
  if (model.parameter_count() != prior.size() ||
      model.output_count() != static_cast<std::size_t>(ms.d.size())) {
    throw Error(ErrorCode::kDimensionMismatch, "model, prior and measurement sizes disagree");
  }

  RngStream init_rng(cfg.seed, 0);
  RngStream loop_rng(cfg.seed, 1);
  RngStream mc_rng(cfg.seed, 2);

  BasePointPool pool = init_pool(prior, model, cfg.n_init, init_rng, ms, cfg.threads);
  int iteration = 0;
  while (pool.eval_count < cfg.max_evals) {
    iterate(pool, ms, cfg, prior, model, loop_rng, ++iteration);
  }
  if (!ms.error_known) refresh_error_stats(pool, ms, cfg);

  EstimationResult result;
  result.parameter_names = prior.names();
  const SystemBuild final_build = build_inverse_systems(pool, ms, cfg, prior, loop_rng);
  propagate(final_build.systems, ms, prior, cfg.m_propagate, mc_rng, result);
  summarize(result);

  result.eval_count = pool.eval_count;
  result.iterations = static_cast<std::size_t>(iteration);
  result.best_index = pool.best_index();
  result.best_rmse = numerics::rmse(pool.entries[result.best_index].f, ms.d);
  result.window_sd = window_sd(pool, cfg.convergence_window);
  if (!ms.error_known) result.estimated_sigma = ms.sigma2.array().sqrt();
  result.trace = std::move(pool);
  return result;
}

}  // namespace igpmc::estimator
