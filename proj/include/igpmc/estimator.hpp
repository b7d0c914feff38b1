#pragma once

#include <optional>
#include <vector>

#include "igpmc/cluster.hpp"
#include "igpmc/gp.hpp"
#include "igpmc/models.hpp"

namespace igpmc::estimator {

using models::ForwardModel;
using models::MeasurementSet;
using models::PriorSpec;
using numerics::Matrix;
using numerics::RngStream;
using numerics::Vector;

struct PoolEntry {
  Vector m;
  Vector f;
  double D = 0.0;
  int iteration = 0;  // 0 for the initial prior draws
  int cluster = -1;   // group that proposed the entry; -1 for prior draws
};

/// Every evaluated (m, F(m)) pair in generation order.
struct BasePointPool {
  std::vector<PoolEntry> entries;
  std::size_t eval_count = 0;

  [[nodiscard]] std::size_t size() const { return entries.size(); }
  [[nodiscard]] std::size_t best_index() const;
  [[nodiscard]] double min_D() const;
  /// Recomputes every D against the (possibly updated) error variances.
  void rescore(const MeasurementSet& ms);
};

enum class OutOfSupport { kClamp, kRedraw };

/// How unknown measurement-error statistics are inferred from residuals.
enum class ErrorModel {
  kPerObservable,  // sd over selected base points of F_i - d_i, per observable
  kPooled,         // one sd over all residuals of the selected base points
  kRelative,       // one relative level c, sigma_i = c * |mean F_i|
};

struct IgpmcConfig {
  std::size_t n_init = 500;
  std::size_t k_select = 100;
  std::size_t cluster_count_initial = 5;
  std::size_t min_cluster_size = 30;
  std::size_t max_evals = 1600;
  std::size_t m_propagate = 1000;
  std::uint64_t seed = 0;

  cluster::PruneRule prune_rule = cluster::PruneRule::kMedian;
  OutOfSupport out_of_support = OutOfSupport::kClamp;
  int redraw_attempts = 20;
  gp::ProcessVariance process_variance = gp::ProcessVariance::kTargetVariance;
  gp::TuneOptions tune;
  ErrorModel error_model = ErrorModel::kPerObservable;
  /// Perturb base-point outputs with measurement-error draws before conditioning.
  bool perturb_base_outputs = true;
  std::size_t threads = 1;
  std::size_t convergence_window = 100;

  void validate() const;
};

/// D = 1/2 (F - d)^T diag(sigma^2)^-1 (F - d).
double weighted_distance(const Vector& f, const MeasurementSet& ms);

/// Draws n_init prior samples (sequentially from rng) and evaluates them,
/// possibly concurrently; the pool is identical for any thread count.
BasePointPool init_pool(const PriorSpec& prior, const ForwardModel& model, std::size_t n_init,
                        RngStream& rng, const MeasurementSet& ms, std::size_t threads = 1);

/// Indices of the k entries with smallest D; ties go to earlier entries.
std::vector<std::size_t> select_base_points(const BasePointPool& pool, std::size_t k);

/// Error sd per observable from residuals of the k best base points.
Vector estimate_error_stats(const BasePointPool& pool, std::size_t k_select, const Vector& d,
                            ErrorModel model = ErrorModel::kPerObservable);
Vector estimate_error_stats(const BasePointPool& pool, const std::vector<std::size_t>& selected,
                            const Vector& d, ErrorModel model);

/// One conditioned inverse GP per kept cluster.
struct InverseSystem {
  gp::InverseGpSurrogate surrogate;
  int group = 0;
  std::size_t size = 0;
  double mean_D = 0.0;
};

struct SystemBuild {
  std::vector<InverseSystem> systems;
  std::size_t groups_formed = 0;
  std::vector<std::size_t> selected;
};

/// Steps 2-4 up to conditioning: select, cluster, prune, then per group tune
/// the kernel and condition on perturbed base outputs.
SystemBuild build_inverse_systems(const BasePointPool& pool, const MeasurementSet& ms,
                                  const IgpmcConfig& cfg, const PriorSpec& prior, RngStream& rng);

struct IterationReport {
  std::size_t groups_formed = 0;
  std::size_t groups_kept = 0;
  std::size_t new_entries = 0;
};

/// One full cycle of steps 2-5. When the error statistics are unknown,
/// ms.sigma2 is refreshed from the residuals first and the pool rescored.
IterationReport iterate(BasePointPool& pool, MeasurementSet& ms, const IgpmcConfig& cfg,
                        const PriorSpec& prior, const ForwardModel& model, RngStream& rng,
                        int iteration);

struct EstimationResult {
  std::vector<std::string> parameter_names;
  Matrix samples;                 // (M * kept clusters) x n_m
  std::vector<int> sample_cluster;
  Matrix sample_variance;         // GP predictive variance per sample (diagnostic)
  Vector mean;
  Vector sd;
  Vector map;
  BasePointPool trace;
  std::optional<Vector> estimated_sigma;
  std::size_t eval_count = 0;
  std::size_t kept_clusters = 0;
  std::size_t iterations = 0;
  std::size_t best_index = 0;
  double best_rmse = 0.0;
  /// Heuristic: sd of each parameter over the last convergence_window trace entries.
  Vector window_sd;
};

/// Step 6: pushes m_propagate measurement realizations through every system.
/// No forward-model evaluations happen here.
void propagate(const std::vector<InverseSystem>& systems, const MeasurementSet& ms,
               const PriorSpec& prior, std::size_t m_propagate, RngStream& rng,
               EstimationResult& result);

/// Per-parameter mean, sd and marginal mode of the samples.
void summarize(EstimationResult& result);

EstimationResult run(const PriorSpec& prior, const ForwardModel& model, MeasurementSet ms,
                     const IgpmcConfig& cfg);

}  // namespace igpmc::estimator
