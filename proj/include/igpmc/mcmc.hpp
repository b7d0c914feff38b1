#pragma once

#include <limits>
#include <vector>

#include "igpmc/models.hpp"

namespace igpmc::mcmc {

using models::ForwardModel;
using models::MeasurementSet;
using models::PriorSpec;
using numerics::Matrix;
using numerics::RngStream;
using numerics::Vector;

enum class LikelihoodKind { kHomoscedastic, kHeteroscedastic, kIntegrated };

struct LikelihoodSpec {
  LikelihoodKind kind = LikelihoodKind::kHomoscedastic;
  /// One entry for homoscedastic, n_d entries for heteroscedastic, empty for integrated.
  Vector sigma2;

  static LikelihoodSpec homoscedastic(double sigma2);
  static LikelihoodSpec heteroscedastic(Vector sigma2);
  static LikelihoodSpec integrated();
  /// Homoscedastic when all ms.sigma2 agree, heteroscedastic otherwise.
  static LikelihoodSpec from_measurements(const MeasurementSet& ms);

  void validate(std::size_t n_d) const;
};

/// Gaussian log-likelihood of outputs f given the measurements. The
/// integrated variant is -(n/2) log(sum r^2) with additive constants dropped.
double log_likelihood(const Vector& f, const MeasurementSet& ms, const LikelihoodSpec& spec);

struct McmcConfig {
  std::size_t n_chains = 3;
  std::size_t thin = 1;                 // archive append every `thin` generations
  double crossover = 0.5;               // per-dimension update probability
  double gamma_scale = 1.0;             // multiplies 2.38 / sqrt(2 d')
  double jump_probability = 0.1;        // chance of gamma = 1 for mode hopping
  double jitter = 1e-6;                 // sd of e, relative to each prior range
  std::size_t budget = 7000;            // forward evaluations, initial archive included
  std::size_t archive_factor = 10;      // initial archive = archive_factor * n_chains
  double burn_in = 0.25;
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  void validate() const;
};

struct ChainState {
  Vector x;
  double log_like = -std::numeric_limits<double>::infinity();
  double log_prior = 0.0;
};

struct SamplerState {
  std::vector<ChainState> chains;
  std::vector<Vector> archive;
  std::size_t generation = 0;
  std::size_t evals = 0;
  std::size_t proposed = 0;
  std::size_t accepted = 0;
};

/// Metropolis log acceptance ratio for a symmetric proposal.
double log_accept_ratio(const ChainState& current, const ChainState& proposal);

/// One generation: every chain proposes x + gamma (z1 - z2) + e with z from the
/// archive. Out-of-prior proposals are rejected without evaluation. At most
/// `eval_cap` forward runs are made; chains beyond the cap keep their state.
void de_step(SamplerState& state, const ForwardModel& model, const PriorSpec& prior,
             const MeasurementSet& ms, const LikelihoodSpec& spec, const McmcConfig& cfg,
             RngStream& rng, std::size_t eval_cap = std::numeric_limits<std::size_t>::max());

/// Potential scale reduction V/W per parameter. chains: one matrix per chain,
/// rows are draws. Identical chains give (n - 1) / n.
Vector gelman_rubin(const std::vector<Matrix>& chains);

struct McmcResult {
  std::vector<std::string> parameter_names;
  std::vector<Matrix> chains;              // full history, one row per generation
  std::vector<std::vector<double>> log_like;
  Matrix samples;                          // post-burn-in, pooled
  std::vector<int> sample_chain;
  Vector mean;
  Vector sd;
  Vector rhat;
  std::size_t eval_count = 0;
  std::size_t burn_in_generations = 0;
  double acceptance_rate = 0.0;
  double best_log_like = -std::numeric_limits<double>::infinity();
  Vector best_m;
};

McmcResult run_mcmc(const PriorSpec& prior, const ForwardModel& model, const MeasurementSet& ms,
                    const LikelihoodSpec& spec, const McmcConfig& cfg);

}  // namespace igpmc::mcmc
