#include "igpmc/cases.hpp"

#include <cmath>

namespace igpmc::cases {

SourceIdModel::SourceIdModel(SourceIdConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.zones < 1 || cfg_.source_intervals < 1 || cfg_.observation_points.empty() ||
      cfg_.observation_times.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "source_id case needs zones, intervals, points and times");
  }
  grid(Vector::Zero(static_cast<Eigen::Index>(cfg_.zones))).validate();
}

std::size_t SourceIdModel::output_count() const {
  return cfg_.observation_points.size() * (cfg_.observation_times.size() + 1);
}

groundwater::FlowGrid SourceIdModel::grid(const Vector& zone_log_k) const {
  groundwater::FlowGrid g =
      groundwater::uniform_grid(cfg_.nx, cfg_.ny, cfg_.lx, cfg_.ly, cfg_.head_left, cfg_.head_right);
  for (std::size_t j = 0; j < g.ny; ++j) {
    for (std::size_t i = 0; i < g.nx; ++i) {
      const std::size_t zone = std::min(i * cfg_.zones / g.nx, cfg_.zones - 1);
      g.log_k[static_cast<Eigen::Index>(g.index(i, j))] = zone_log_k[static_cast<Eigen::Index>(zone)];
    }
  }
  return g;
}

Vector SourceIdModel::evaluate(const Vector& m) const {
  if (m.size() != static_cast<Eigen::Index>(parameter_count())) {
    throw Error(ErrorCode::kDimensionMismatch, "source_id parameter length");
  }
  const auto n_s = static_cast<Eigen::Index>(cfg_.source_intervals);
  const auto n_z = static_cast<Eigen::Index>(cfg_.zones);
  const groundwater::FlowGrid g = grid(m.segment(2 + n_s, n_z));
  const Vector head = groundwater::solve_steady_flow(g);

  groundwater::SourceSpec src;
  src.x = m[0];
  src.y = m[1];
  for (Eigen::Index k = 0; k < n_s; ++k) src.strengths.push_back(m[2 + k]);

  groundwater::TransportOptions opt;
  opt.porosity = cfg_.porosity;
  opt.alpha_l = cfg_.alpha_l;
  opt.alpha_t = cfg_.alpha_t;
  opt.output_times = cfg_.observation_times;
  const auto tr = groundwater::solve_transport(g, head, src, opt);

  Vector out(static_cast<Eigen::Index>(output_count()));
  Eigen::Index k = 0;
  for (const auto& c : tr.concentration) {
    for (const auto& p : cfg_.observation_points) out[k++] = groundwater::interpolate(g, c, p.x, p.y);
  }
  for (const auto& p : cfg_.observation_points) out[k++] = groundwater::interpolate(g, head, p.x, p.y);
  return out;
}

std::vector<std::string> SourceIdModel::output_names() const {
  std::vector<std::string> names;
  for (std::size_t t = 0; t < cfg_.observation_times.size(); ++t) {
    for (std::size_t p = 0; p < cfg_.observation_points.size(); ++p) {
      names.push_back("c_t" + std::to_string(t + 1) + "_p" + std::to_string(p + 1));
    }
  }
  for (std::size_t p = 0; p < cfg_.observation_points.size(); ++p) names.push_back("h_p" + std::to_string(p + 1));
  return names;
}

PriorSpec source_id_prior(const SourceIdConfig& cfg) {
  std::vector<models::ParameterPrior> params;
  params.push_back({"x_s", models::UniformPrior{cfg.source_x_lo, cfg.source_x_hi}});
  params.push_back({"y_s", models::UniformPrior{cfg.source_y_lo, cfg.source_y_hi}});
  for (std::size_t k = 0; k < cfg.source_intervals; ++k) {
    params.push_back({"S" + std::to_string(k + 1), models::UniformPrior{0.0, cfg.strength_max}});
  }
  for (std::size_t z = 0; z < cfg.zones; ++z) {
    params.push_back({"Y" + std::to_string(z + 1), models::UniformPrior{cfg.log_k_lo, cfg.log_k_hi}});
  }
  return PriorSpec(std::move(params));
}

std::shared_ptr<const ForwardModel> case3_model(const SourceIdConfig& cfg) {
  return std::make_shared<SourceIdModel>(cfg);
}

groundwater::KlField kl_case_field(const KlCaseConfig& cfg, std::size_t n_terms) {
  const double h = cfg.length / static_cast<double>(cfg.n);
  return groundwater::kl_decompose(cfg.sigma_y2, cfg.lambda, cfg.lambda, cfg.n, cfg.n, h, h, n_terms,
                                   groundwater::KlMethod::kSeparable, cfg.mean_log_k);
}

KlFieldModel::KlFieldModel(KlCaseConfig cfg, groundwater::KlField field)
    : cfg_(std::move(cfg)), field_(std::move(field)) {
  if (field_.nx != cfg_.n || field_.ny != cfg_.n) {
    throw Error(ErrorCode::kDimensionMismatch, "KL field grid differs from the case grid");
  }
  const double step = cfg_.length / static_cast<double>(cfg_.observation_grid + 1);
  for (std::size_t b = 1; b <= cfg_.observation_grid; ++b) {
    for (std::size_t a = 1; a <= cfg_.observation_grid; ++a) {
      points_.push_back({step * static_cast<double>(a), step * static_cast<double>(b)});
    }
  }
}

groundwater::FlowGrid KlFieldModel::grid(const Vector& log_k) const {
  groundwater::FlowGrid g = groundwater::uniform_grid(cfg_.n, cfg_.n, cfg_.length, cfg_.length,
                                                      cfg_.head_left, cfg_.head_right);
  g.log_k = log_k;
  g.storage = cfg_.storage;
  return g;
}

std::vector<double> KlFieldModel::observation_times() const {
  std::vector<double> t;
  for (std::size_t k = 1; k <= cfg_.observation_count; ++k) {
    t.push_back(static_cast<double>(k * cfg_.steps_per_observation) * cfg_.dt);
  }
  return t;
}

Vector KlFieldModel::evaluate(const Vector& xi) const {
  const groundwater::FlowGrid g = grid(groundwater::kl_realize(field_, xi));
  // Start from the homogeneous profile: the heterogeneous field then drives a
  // transient towards its own steady state.
  const auto heads = groundwater::solve_transient_flow(
      g, cfg_.dt, cfg_.steps_per_observation * cfg_.observation_count, groundwater::linear_head_profile(g));
  Vector out(static_cast<Eigen::Index>(output_count()));
  Eigen::Index k = 0;
  for (std::size_t t = 1; t <= cfg_.observation_count; ++t) {
    const Vector& h = heads[t * cfg_.steps_per_observation - 1];
    for (const auto& p : points_) out[k++] = groundwater::interpolate(g, h, p.x, p.y);
  }
  return out;
}

std::shared_ptr<const KlFieldModel> case4_model(const groundwater::KlField& field, const KlCaseConfig& cfg) {
  return std::make_shared<KlFieldModel>(cfg, field);
}

CaseSetup bimodal_case(std::uint64_t seed) {
  CaseSetup c;
  c.name = "bimodal";
  c.model = std::make_shared<models::BimodalModel>();
  c.truth_model = c.model;
  c.prior = PriorSpec::uniform_box({"m"}, Vector::Constant(1, -1.0), Vector::Constant(1, 1.0));
  c.m_true = Vector::Constant(1, kBimodalTruth);
  c.noise = models::AbsoluteNoise{kBimodalSigma};
  numerics::RngStream rng(seed, 100);
  c.ms = models::make_measurements(*c.model, c.m_true, c.noise, rng);

  c.igpmc.n_init = 800;
  c.igpmc.k_select = 800;
  c.igpmc.cluster_count_initial = 5;
  c.igpmc.min_cluster_size = 100;
  c.igpmc.max_evals = 1600;
  c.igpmc.m_propagate = 1000;
  c.igpmc.seed = seed;

  c.mcmc.n_chains = 2;
  c.mcmc.budget = 2000;
  c.mcmc.jump_probability = 0.7;
  c.mcmc.seed = seed;
  c.likelihood = mcmc::LikelihoodSpec::homoscedastic(kBimodalSigma * kBimodalSigma);
  return c;
}

CaseSetup bimodal_canonical() {
  CaseSetup c = bimodal_case(0);
  c.ms.d = Vector::Constant(1, kBimodalMeasurement);
  return c;
}

CaseSetup hymod_case(std::uint64_t seed) {
  CaseSetup c;
  c.name = "hymod";
  numerics::RngStream forcing_rng(seed, 200);
  auto model = std::make_shared<models::HymodModel>(
      models::synthetic_forcing(models::SyntheticForcingOptions{}, forcing_rng), 65);
  c.model = model;
  c.truth_model = model;
  c.prior = models::hymod_default_prior();
  c.m_true = models::HymodParams{180.0, 0.6, 0.65, 0.025, 0.45}.to_vector();
  c.noise = models::RelativeNoise{0.1, 1e-6};
  numerics::RngStream rng(seed, 201);
  c.ms = models::make_measurements(*c.model, c.m_true, c.noise, rng);

  c.igpmc.n_init = 1000;
  c.igpmc.k_select = 700;
  c.igpmc.cluster_count_initial = 5;
  c.igpmc.min_cluster_size = 30;
  c.igpmc.max_evals = 3000;
  c.igpmc.m_propagate = 1000;
  c.igpmc.seed = seed;

  c.mcmc.n_chains = 3;
  c.mcmc.budget = 7000;
  c.mcmc.seed = seed;
  c.likelihood = mcmc::LikelihoodSpec::heteroscedastic(c.ms.sigma2);
  return c;
}

CaseSetup source_id_case(std::uint64_t seed) {
  CaseSetup c;
  c.name = "source_id";
  const SourceIdConfig cfg;
  c.model = case3_model(cfg);
  c.truth_model = c.model;
  c.prior = source_id_prior(cfg);
  c.m_true.resize(11);
  c.m_true << 3.4, 5.3, 1.2, 2.8, 1.9, 0.6, 2.4, 1.0, 2.2, 1.8, 2.0;

  // Concentrations carry 0.05, heads 0.01.
  const std::size_t n_conc = cfg.observation_points.size() * cfg.observation_times.size();
  Vector sigma(static_cast<Eigen::Index>(c.model->output_count()));
  sigma.head(static_cast<Eigen::Index>(n_conc)).setConstant(0.05);
  sigma.tail(static_cast<Eigen::Index>(cfg.observation_points.size())).setConstant(0.01);
  c.noise = models::VectorNoise{sigma};
  numerics::RngStream rng(seed, 300);
  c.ms = models::make_measurements(*c.model, c.m_true, c.noise, rng);

  c.igpmc.n_init = 500;
  c.igpmc.k_select = 100;
  c.igpmc.cluster_count_initial = 5;
  c.igpmc.min_cluster_size = 30;
  c.igpmc.max_evals = 2500;
  c.igpmc.m_propagate = 1000;
  c.igpmc.seed = seed;

  c.mcmc.n_chains = 3;
  c.mcmc.budget = 20000;
  c.mcmc.seed = seed;
  c.likelihood = mcmc::LikelihoodSpec::heteroscedastic(c.ms.sigma2);
  return c;
}

CaseSetup kl_field_case(std::uint64_t seed) {
  CaseSetup c;
  c.name = "kl_field";
  const KlCaseConfig cfg;
  const groundwater::KlField truth_field = kl_case_field(cfg, cfg.n_terms_truth);
  const groundwater::KlField field = kl_case_field(cfg, cfg.n_terms);
  c.model = case4_model(field, cfg);
  auto truth_model = case4_model(truth_field, cfg);
  c.truth_model = truth_model;
  c.prior = PriorSpec::truncated_normal(cfg.n_terms, cfg.bound);

  const PriorSpec truth_prior = PriorSpec::truncated_normal(cfg.n_terms_truth, cfg.bound);
  numerics::RngStream truth_rng(seed, 400);
  const Vector xi_truth = truth_prior.sample(truth_rng);
  c.truth_log_k = groundwater::kl_realize(truth_field, xi_truth);
  // The estimated parameters are the leading coefficients of the truth.
  c.m_true = xi_truth.head(static_cast<Eigen::Index>(cfg.n_terms));

  c.noise = models::AbsoluteNoise{0.01};
  numerics::RngStream rng(seed, 401);
  c.ms = models::make_measurements(*truth_model, xi_truth, c.noise, rng);

  c.igpmc.n_init = 1000;
  c.igpmc.k_select = 100;
  c.igpmc.cluster_count_initial = 5;
  c.igpmc.min_cluster_size = 30;
  c.igpmc.max_evals = 3000;
  c.igpmc.m_propagate = 1000;
  c.igpmc.seed = seed;

  c.mcmc.n_chains = 3;
  c.mcmc.budget = 20000;
  c.mcmc.seed = seed;
  c.likelihood = mcmc::LikelihoodSpec::homoscedastic(0.01 * 0.01);
  return c;
}

CaseSetup make_case(const std::string& name, std::uint64_t seed) {
  if (name == "bimodal") return bimodal_case(seed);
  if (name == "hymod") return hymod_case(seed);
  if (name == "source_id") return source_id_case(seed);
  if (name == "kl_field") return kl_field_case(seed);
  throw Error(ErrorCode::kInvalidConfig, "unknown case '" + name + "'");
}

}  // namespace igpmc::cases
