#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"

#include "igpmc/io.hpp"
#include "igpmc/reference.hpp"

namespace igpmc::cli {

namespace {

using nlohmann::json;
using numerics::Matrix;
using numerics::Vector;

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::kInvalidConfig, msg); }

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) config_error(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) config_error("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& target, const std::string& where) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw std::invalid_argument("bool");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw std::invalid_argument("string");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() || v.get<long long>() < 0) throw std::invalid_argument("int");
    } else {
      if (!v.is_number()) throw std::invalid_argument("number");
    }
    target = v.get<T>();
  } catch (const std::exception&) {
    config_error("bad value for '" + std::string(key) + "' in " + where);
  }
}

template <typename E>
void read_enum(const json& j, const char* key, E& target, const std::vector<std::pair<std::string, E>>& names,
               const std::string& where) {
  if (!j.contains(key)) return;
  std::string s;
  read(j, key, s, where);
  for (const auto& [n, e] : names) {
    if (n == s) {
      target = e;
      return;
    }
  }
  config_error("bad value '" + s + "' for '" + std::string(key) + "' in " + where);
}

void apply_igpmc(const json& j, estimator::IgpmcConfig& c) {
  const std::string w = "igpmc";
  reject_unknown(j, {"n_init", "k_select", "cluster_count_initial", "min_cluster_size", "max_evals",
                     "m_propagate", "prune_rule", "out_of_support", "redraw_attempts", "process_variance",
                     "error_model", "perturb_base_outputs", "band_lo", "band_hi", "q_min", "q_max",
                     "convergence_window"},
                 w);
  read(j, "n_init", c.n_init, w);
  read(j, "k_select", c.k_select, w);
  read(j, "cluster_count_initial", c.cluster_count_initial, w);
  read(j, "min_cluster_size", c.min_cluster_size, w);
  read(j, "max_evals", c.max_evals, w);
  read(j, "m_propagate", c.m_propagate, w);
  read(j, "redraw_attempts", c.redraw_attempts, w);
  read(j, "perturb_base_outputs", c.perturb_base_outputs, w);
  read(j, "band_lo", c.tune.band_lo, w);
  read(j, "band_hi", c.tune.band_hi, w);
  read(j, "q_min", c.tune.q_min, w);
  read(j, "q_max", c.tune.q_max, w);
  read(j, "convergence_window", c.convergence_window, w);
  read_enum(j, "prune_rule", c.prune_rule,
            {{"median", cluster::PruneRule::kMedian}, {"size_only", cluster::PruneRule::kSizeOnly}}, w);
  read_enum(j, "out_of_support", c.out_of_support,
            {{"clamp", estimator::OutOfSupport::kClamp}, {"redraw", estimator::OutOfSupport::kRedraw}}, w);
  read_enum(j, "process_variance", c.process_variance,
            {{"target", gp::ProcessVariance::kTargetVariance}, {"input", gp::ProcessVariance::kInputVariance}}, w);
  read_enum(j, "error_model", c.error_model,
            {{"per_observable", estimator::ErrorModel::kPerObservable},
             {"pooled", estimator::ErrorModel::kPooled},
             {"relative", estimator::ErrorModel::kRelative}},
            w);
}

void apply_mcmc(const json& j, mcmc::McmcConfig& c) {
  const std::string w = "mcmc";
  reject_unknown(j, {"n_chains", "thin", "crossover", "gamma_scale", "jump_probability", "jitter", "budget",
                     "archive_factor", "burn_in"},
                 w);
  read(j, "n_chains", c.n_chains, w);
  read(j, "thin", c.thin, w);
  read(j, "crossover", c.crossover, w);
  read(j, "gamma_scale", c.gamma_scale, w);
  read(j, "jump_probability", c.jump_probability, w);
  read(j, "jitter", c.jitter, w);
  read(j, "budget", c.budget, w);
  read(j, "archive_factor", c.archive_factor, w);
  read(j, "burn_in", c.burn_in, w);
}

void validate_custom(const json& j) {
  reject_unknown(j, {"g", "b", "parameters", "d", "sigma"}, "custom");
  for (const char* k : {"g", "parameters", "d", "sigma"}) {
    if (!j.contains(k)) config_error("custom model needs '" + std::string(k) + "'");
  }
  for (const auto& p : j.at("parameters")) reject_unknown(p, {"name", "lo", "hi"}, "custom.parameters");
}

cases::CaseSetup custom_case(const json& j, std::uint64_t seed) {
  const json& g = j.at("g");
  if (!g.is_array() || g.empty()) config_error("custom.g must be a non-empty matrix");
  Matrix gm(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(g.at(0).size()));
  for (std::size_t r = 0; r < g.size(); ++r) {
    const Vector row = io::vector_from_json(g[r]);
    if (row.size() != gm.cols()) config_error("custom.g is ragged");
    gm.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  const Vector b = j.contains("b") ? io::vector_from_json(j.at("b")) : Vector::Zero(gm.rows());
  std::vector<models::ParameterPrior> params;
  for (const auto& p : j.at("parameters")) {
    params.push_back({p.at("name").get<std::string>(), models::UniformPrior{p.at("lo").get<double>(), p.at("hi").get<double>()}});
  }
  cases::CaseSetup c;
  c.name = "custom";
  c.model = std::make_shared<models::LinearModel>(gm, b);
  c.truth_model = c.model;
  c.prior = models::PriorSpec(std::move(params));
  const Vector sigma = io::vector_from_json(j.at("sigma"));
  c.ms.d = io::vector_from_json(j.at("d"));
  c.ms.sigma2 = sigma.array().square();
  c.noise = models::VectorNoise{sigma};
  if (c.prior.size() != static_cast<std::size_t>(gm.cols()) || c.ms.d.size() != gm.rows() ||
      sigma.size() != gm.rows() || b.size() != gm.rows()) {
    config_error("custom model dimensions disagree");
  }
  c.m_true = Vector::Constant(gm.cols(), std::numeric_limits<double>::quiet_NaN());
  c.igpmc.seed = seed;
  c.igpmc.n_init = 200;
  c.igpmc.k_select = 100;
  c.igpmc.max_evals = 600;
  c.igpmc.min_cluster_size = 10;
  c.mcmc.seed = seed;
  c.likelihood = mcmc::LikelihoodSpec::from_measurements(c.ms);
  return c;
}

cases::CaseSetup base_case(const std::string& name, std::uint64_t seed, const json& custom) {
  if (name == "custom") return custom_case(custom, seed);
  return cases::make_case(name, seed);
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

numerics::Kde1d safe_kde(std::vector<double> samples) {
  try {
    return numerics::make_kde(samples);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kZeroBandwidth) throw;
    const double scale = samples.empty() ? 1.0 : std::abs(samples.front());
    return {std::move(samples), std::max(1e-9 * scale, 1e-12)};
  }
}

std::size_t env_threads() {
  if (const char* t = std::getenv("IGPMC_THREADS")) {
    try {
      const long n = std::stol(t);
      if (n >= 1) return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
    }
    config_error("IGPMC_THREADS must be a positive integer");
  }
  return numerics::default_thread_count();
}

json summary_json(const std::string& method, const std::vector<std::string>& names, const Matrix& samples,
                  std::size_t eval_count, double best_rmse) {
  const SampleSummary s = summarize_samples(samples);
  json params = json::array();
  for (std::size_t j = 0; j < names.size(); ++j) {
    params.push_back({{"name", names[j]}, {"mean", s.mean[j]}, {"sd", s.sd[j]}, {"map", s.map[j]}});
  }
  return {{"method", method},
          {"parameters", params},
          {"sample_count", samples.rows()},
          {"eval_count", eval_count},
          {"best_rmse", best_rmse}};
}

void write_samples(const fs::path& p, const Matrix& samples, const std::vector<int>& cluster) {
  std::ostringstream ss;
  io::write_samples_csv(ss, samples, cluster);
  io::write_text(p, ss.str());
}

struct MethodOutput {
  Matrix samples;
  std::size_t eval_count = 0;
};

MethodOutput write_igpmc(const cases::CaseSetup& c, const ExperimentConfig& cfg, const fs::path& dir,
                         std::vector<std::string>& artifacts, const std::string& prefix) {
  estimator::IgpmcConfig ic = cfg.igpmc;
  ic.threads = cfg.threads;
  const auto r = estimator::run(c.prior, *c.model, c.ms, ic);
  write_samples(dir / "samples.csv", r.samples, r.sample_cluster);
  std::ostringstream trace;
  io::write_trace_csv(trace, r.trace);
  io::write_text(dir / "trace.csv", trace.str());
  json s = summary_json("igpmc", r.parameter_names, r.samples, r.eval_count, r.best_rmse);
  s["kept_clusters"] = r.kept_clusters;
  s["iterations"] = r.iterations;
  s["best_base_point"] = to_std(r.trace.entries[r.best_index].m);
  s["window_sd"] = to_std(r.window_sd);
  s["window_sd_note"] = "heuristic: sd of the last trace entries, not a convergence test";
  if (r.estimated_sigma) s["estimated_sigma"] = to_std(*r.estimated_sigma);
  io::write_text(dir / "summary.json", s.dump(2) + "\n");
  for (const char* f : {"samples.csv", "trace.csv", "summary.json"}) artifacts.push_back(prefix + f);
  return {r.samples, r.eval_count};
}

MethodOutput write_mcmc(const cases::CaseSetup& c, const ExperimentConfig& cfg, const fs::path& dir,
                        std::vector<std::string>& artifacts, const std::string& prefix) {
  mcmc::McmcConfig mc = cfg.mcmc;
  mc.threads = cfg.threads;
  const auto spec = cfg.error_known ? c.likelihood : mcmc::LikelihoodSpec::integrated();
  const auto r = mcmc::run_mcmc(c.prior, *c.model, c.ms, spec, mc);
  write_samples(dir / "samples.csv", r.samples, r.sample_chain);
  std::ostringstream trace;
  io::write_chain_csv(trace, r);
  io::write_text(dir / "trace.csv", trace.str());
  // One extra run at the best state for the RMSE report; not part of the budget.
  const double best_rmse = numerics::rmse(c.model->evaluate(r.best_m), c.ms.d);
  json s = summary_json("mcmc", r.parameter_names, r.samples, r.eval_count, best_rmse);
  s["rhat"] = to_std(r.rhat);
  s["acceptance_rate"] = r.acceptance_rate;
  s["burn_in_generations"] = r.burn_in_generations;
  s["best_m"] = to_std(r.best_m);
  io::write_text(dir / "summary.json", s.dump(2) + "\n");
  for (const char* f : {"samples.csv", "trace.csv", "summary.json"}) artifacts.push_back(prefix + f);
  return {r.samples, r.eval_count};
}

void write_kde_grids(const Matrix& a, const Matrix& b, const std::vector<std::string>& names, std::size_t points,
                     const fs::path& dir, std::vector<std::string>& artifacts) {
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    std::vector<double> xa(a.col(j).data(), a.col(j).data() + a.rows());
    std::vector<double> xb(b.col(j).data(), b.col(j).data() + b.rows());
    const auto ka = safe_kde(xa);
    const auto kb = safe_kde(xb);
    const double pad = 3.0 * std::max(ka.bandwidth, kb.bandwidth);
    const double lo = std::min(*std::min_element(xa.begin(), xa.end()), *std::min_element(xb.begin(), xb.end())) - pad;
    const double hi = std::max(*std::max_element(xa.begin(), xa.end()), *std::max_element(xb.begin(), xb.end())) + pad;
    const auto da = numerics::kde_grid(ka, lo, hi, points);
    const auto db = numerics::kde_grid(kb, lo, hi, points);
    std::ostringstream ss;
    ss << "x,dens_igpmc,dens_mcmc\n";
    for (std::size_t i = 0; i < points; ++i) {
      const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
      ss << io::format_double(x) << ',' << io::format_double(da[i]) << ',' << io::format_double(db[i]) << '\n';
    }
    const std::string file = "kde_" + names[static_cast<std::size_t>(j)] + ".csv";
    io::write_text(dir / file, ss.str());
    artifacts.push_back(file);
  }
}

json read_json_file(const fs::path& p) {
  const std::string text = io::read_text(p);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    config_error(p.string() + " is not valid JSON: " + e.what());
  }
}

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidConfig:
    case ErrorCode::kDimensionMismatch:
    case ErrorCode::kIncompatibleResults:
      return kExitConfig;
    case ErrorCode::kIoError:
      return kExitIo;
    default:
      return kExitNumerical;
  }
}

ExperimentConfig parse_config(const json& j) {
  reject_unknown(j, {"case", "method", "seed", "output", "fixture", "error_known", "kde_points", "igpmc", "mcmc",
                     "custom"},
                 "config");
  ExperimentConfig c;
  read(j, "case", c.case_name, "config");
  read(j, "method", c.method, "config");
  read(j, "seed", c.seed, "config");
  read(j, "output", c.output, "config");
  read(j, "fixture", c.fixture, "config");
  read(j, "error_known", c.error_known, "config");
  read(j, "kde_points", c.kde_points, "config");
  if (c.method != "igpmc" && c.method != "mcmc" && c.method != "both") {
    config_error("method must be igpmc, mcmc or both");
  }
  if (c.kde_points < 2) config_error("kde_points must be at least 2");
  static const std::set<std::string> known{"bimodal", "hymod", "source_id", "kl_field", "custom"};
  if (!known.count(c.case_name)) config_error("unknown case '" + c.case_name + "'");
  if (c.case_name == "custom") {
    if (!j.contains("custom")) config_error("case custom needs a 'custom' block");
    c.custom = j.at("custom");
    validate_custom(c.custom);
  } else if (j.contains("custom")) {
    config_error("'custom' block is only valid with case custom");
  }

  // Defaults come from the case, so the JSON only carries deviations.
  const cases::CaseSetup base = base_case(c.case_name, c.seed, c.custom);
  c.igpmc = base.igpmc;
  c.mcmc = base.mcmc;
  c.igpmc.seed = c.seed;
  c.mcmc.seed = c.seed;
  if (j.contains("igpmc")) apply_igpmc(j.at("igpmc"), c.igpmc);
  if (j.contains("mcmc")) apply_mcmc(j.at("mcmc"), c.mcmc);
  c.igpmc.validate();
  c.mcmc.validate();
  c.threads = env_threads();
  c.source = j;
  return c;
}

cases::CaseSetup build_case(const ExperimentConfig& cfg) {
  cases::CaseSetup c = base_case(cfg.case_name, cfg.seed, cfg.custom);
  if (!cfg.fixture.empty()) {
    const json f = read_json_file(cfg.fixture);
    if (f.value("schema", std::string{}) != kFixtureSchema) config_error("fixture has a wrong or missing schema tag");
    if (f.value("case", std::string{}) != cfg.case_name) config_error("fixture belongs to a different case");
    if (f.contains("forcing")) {
      models::Forcing forcing{f.at("forcing").at("rain").get<std::vector<double>>(),
                              f.at("forcing").at("pet").get<std::vector<double>>()};
      const auto warmup = f.at("forcing").at("warmup").get<std::size_t>();
      auto model = std::make_shared<models::HymodModel>(std::move(forcing), warmup);
      c.model = model;
      c.truth_model = model;
    }
    c.ms.d = io::vector_from_json(f.at("d"));
    c.ms.sigma2 = io::vector_from_json(f.at("sigma2"));
    c.m_true = io::vector_from_json(f.at("m_true"));
    if (c.ms.d.size() != static_cast<Eigen::Index>(c.model->output_count()) ||
        c.m_true.size() != static_cast<Eigen::Index>(c.prior.size())) {
      config_error("fixture dimensions do not match the case");
    }
    if (c.likelihood.kind == mcmc::LikelihoodKind::kHeteroscedastic) {
      c.likelihood = mcmc::LikelihoodSpec::heteroscedastic(c.ms.sigma2);
    } else if (c.likelihood.kind == mcmc::LikelihoodKind::kHomoscedastic) {
      c.likelihood = mcmc::LikelihoodSpec::from_measurements(c.ms);
    }
  }
  c.ms.error_known = cfg.error_known;
  c.ms.validate();
  return c;
}

json make_fixture(const std::string& case_name, std::uint64_t seed, bool canonical) {
  if (canonical && case_name != "bimodal") config_error("--canonical only applies to the bimodal case");
  const cases::CaseSetup c = canonical ? cases::bimodal_canonical() : cases::make_case(case_name, seed);
  json noise;
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, models::AbsoluteNoise>) {
          noise = {{"kind", "absolute"}, {"sigma", n.sigma}};
        } else if constexpr (std::is_same_v<T, models::RelativeNoise>) {
          noise = {{"kind", "relative"}, {"fraction", n.fraction}, {"floor", n.floor}};
        } else {
          noise = {{"kind", "vector"}, {"sigma", to_std(n.sigma)}};
        }
      },
      c.noise);
  json f = {{"schema", kFixtureSchema},
            {"case", c.name},
            {"seed", seed},
            {"canonical", canonical},
            {"parameter_names", c.prior.names()},
            {"m_true", to_std(c.m_true)},
            {"d", to_std(c.ms.d)},
            {"sigma2", to_std(c.ms.sigma2)},
            {"sigma", to_std(c.ms.sigma2.array().sqrt())},
            {"noise", noise}};
  if (const auto* h = dynamic_cast<const models::HymodModel*>(c.model.get())) {
    f["forcing"] = {{"rain", h->forcing().rain}, {"pet", h->forcing().pet}, {"warmup", h->warmup()}};
  }
  if (c.truth_log_k.size() > 0) f["truth_log_k"] = to_std(c.truth_log_k);
  return f;
}

SampleSummary summarize_samples(const Matrix& samples) {
  SampleSummary s;
  for (Eigen::Index j = 0; j < samples.cols(); ++j) {
    std::vector<double> col(samples.col(j).data(), samples.col(j).data() + samples.rows());
    s.mean.push_back(numerics::mean(col));
    s.sd.push_back(numerics::stddev(col));
    try {
      s.map.push_back(numerics::kde_mode(numerics::make_kde(col)));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kZeroBandwidth) throw;
      s.map.push_back(s.mean.back());
    }
  }
  return s;
}

fs::path resolve_output(const std::string& path) {
  fs::path p(path);
  if (p.is_relative()) {
    if (const char* root = std::getenv("IGPMC_OUTPUT_ROOT")) p = fs::path(root) / p;
  }
  return p;
}

json cmd_estimate(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  const cases::CaseSetup c = build_case(cfg);
  io::StagedDirectory stage(out_dir);
  std::vector<std::string> artifacts;
  json evals = json::object();
  json manifest = {{"version", kVersion},
                   {"config_hash", io::fnv1a_hex(cfg.source.dump())},
                   {"config", cfg.source},
                   {"case", cfg.case_name},
                   {"method", cfg.method},
                   {"seed", cfg.seed}};
  try {
    if (cfg.method == "igpmc") {
      evals["igpmc"] = write_igpmc(c, cfg, stage.path(), artifacts, "").eval_count;
    } else if (cfg.method == "mcmc") {
      evals["mcmc"] = write_mcmc(c, cfg, stage.path(), artifacts, "").eval_count;
    } else {
      fs::create_directories(stage.path() / "igpmc");
      fs::create_directories(stage.path() / "mcmc");
      const auto a = write_igpmc(c, cfg, stage.path() / "igpmc", artifacts, "igpmc/");
      const auto b = write_mcmc(c, cfg, stage.path() / "mcmc", artifacts, "mcmc/");
      evals["igpmc"] = a.eval_count;
      evals["mcmc"] = b.eval_count;
      write_kde_grids(a.samples, b.samples, c.prior.names(), cfg.kde_points, stage.path(), artifacts);
    }
    manifest["status"] = "ok";
  } catch (const Error& e) {
    if (exit_code_for(e.code()) != kExitNumerical) throw;
    // Numerical failures leave a manifest-only directory that records the error.
    for (const auto& entry : fs::directory_iterator(stage.path())) fs::remove_all(entry.path());
    artifacts.clear();
    manifest["status"] = "failed";
    manifest["error"] = e.what();
  }
  manifest["eval_counts"] = evals;
  manifest["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  artifacts.push_back("manifest.json");
  manifest["artifacts"] = artifacts;
  io::write_text(stage.path() / "manifest.json", manifest.dump(2) + "\n");
  stage.commit();
  return manifest;
}

json cmd_compare(const fs::path& a, const fs::path& b) {
  auto load = [](const fs::path& dir) {
    const json summary = read_json_file(dir / "summary.json");
    std::ifstream in(dir / "samples.csv");
    if (!in) throw Error(ErrorCode::kIoError, "cannot open " + (dir / "samples.csv").string());
    return std::pair{summary, io::read_samples_csv(in)};
  };
  const auto [sa, ta] = load(a);
  const auto [sb, tb] = load(b);
  std::vector<std::string> na, nb;
  for (const auto& p : sa.at("parameters")) na.push_back(p.at("name").get<std::string>());
  for (const auto& p : sb.at("parameters")) nb.push_back(p.at("name").get<std::string>());
  if (na != nb || ta.columns != tb.columns || static_cast<Eigen::Index>(na.size()) != ta.samples.cols()) {
    throw Error(ErrorCode::kIncompatibleResults, "result sets have different parameter schemas");
  }
  const SampleSummary xa = summarize_samples(ta.samples);
  const SampleSummary xb = summarize_samples(tb.samples);
  json params = json::array();
  for (std::size_t j = 0; j < na.size(); ++j) {
    const auto col = [](const Matrix& m, std::size_t k) {
      const auto jj = static_cast<Eigen::Index>(k);
      return std::vector<double>(m.col(jj).data(), m.col(jj).data() + m.rows());
    };
    params.push_back({{"name", na[j]},
                      {"mean_a", xa.mean[j]},
                      {"mean_b", xb.mean[j]},
                      {"mean_delta", xb.mean[j] - xa.mean[j]},
                      {"sd_a", xa.sd[j]},
                      {"sd_b", xb.sd[j]},
                      {"sd_delta", xb.sd[j] - xa.sd[j]},
                      {"ks", numerics::ks_distance(col(ta.samples, j), col(tb.samples, j))}});
  }
  const double ra = sa.value("best_rmse", std::numeric_limits<double>::quiet_NaN());
  const double rb = sb.value("best_rmse", std::numeric_limits<double>::quiet_NaN());
  return {{"a", a.string()},
          {"b", b.string()},
          {"parameters", params},
          {"best_rmse_a", ra},
          {"best_rmse_b", rb},
          {"best_rmse_delta", rb - ra}};
}

std::string format_comparison(const json& r) {
  std::ostringstream ss;
  ss << std::left << std::setw(12) << "parameter" << std::right << std::setw(14) << "mean_a" << std::setw(14)
     << "mean_b" << std::setw(14) << "sd_a" << std::setw(14) << "sd_b" << std::setw(10) << "ks" << '\n';
  ss << std::setprecision(6);
  for (const auto& p : r.at("parameters")) {
    ss << std::left << std::setw(12) << p.at("name").get<std::string>() << std::right << std::setw(14)
       << p.at("mean_a").get<double>() << std::setw(14) << p.at("mean_b").get<double>() << std::setw(14)
       << p.at("sd_a").get<double>() << std::setw(14) << p.at("sd_b").get<double>() << std::setw(10)
       << p.at("ks").get<double>() << '\n';
  }
  ss << "best-point RMSE: " << r.at("best_rmse_a").get<double>() << " vs " << r.at("best_rmse_b").get<double>()
     << '\n';
  return ss.str();
}

json gp_selftest(std::size_t problems, std::uint64_t seed) {
  numerics::RngStream rng(seed, 0);
  int rejected = 0;
  double worst_mean = 0.0;
  double worst_var = 0.0;
  double worst_interp = 0.0;
  bool variance_bounded = true;
  for (std::size_t t = 0; t < problems; ++t) {
    const auto p = reference::random_gp_problem(rng, 1e5, rejected);
    const gp::InverseGpSurrogate s(p.inputs, p.targets, p.kernel);
    const auto got = s.predict(p.query);
    const auto want = reference::dense_gp(p.inputs, p.targets, p.kernel.alpha, s.jitter(), p.query);
    worst_mean = std::max(worst_mean, (got.mean - want.mean).cwiseAbs().maxCoeff());
    worst_var = std::max(worst_var, (got.variance - want.variance).cwiseAbs().maxCoeff());
    if (((got.variance - s.process_variance()).array() > 1e-12).any() || (got.variance.array() < 0.0).any()) {
      variance_bounded = false;
    }
    for (Eigen::Index i = 0; i < p.inputs.rows(); ++i) {
      const auto at = s.predict(p.inputs.row(i).transpose());
      worst_interp = std::max(worst_interp, (at.mean - p.targets.row(i).transpose()).cwiseAbs().maxCoeff());
      worst_interp = std::max(worst_interp, at.variance.maxCoeff());
    }
  }
  const bool pass = worst_mean <= 1e-10 && worst_var <= 1e-10 && worst_interp <= 1e-8 && variance_bounded;
  return {{"problems", problems},         {"redrawn_ill_conditioned", rejected},
          {"max_mean_error", worst_mean}, {"max_variance_error", worst_var},
          {"max_interpolation_error", worst_interp}, {"variance_bounded", variance_bounded},
          {"pass", pass}};
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Inverse Gaussian process Monte Carlo parameter estimation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  auto* fixture = app.add_subcommand("fixture", "Write the truth and synthetic measurements of a case");
  std::string f_case = "bimodal";
  std::uint64_t f_seed = 0;
  bool f_canonical = false;
  std::string f_out;
  fixture->add_option("--case", f_case, "bimodal | hymod | source_id | kl_field")->capture_default_str();
  fixture->add_option("--seed", f_seed)->capture_default_str();
  fixture->add_flag("--canonical", f_canonical, "bimodal only: pin d = 0.0414");
  fixture->add_option("--out", f_out, "fixture JSON path")->required();

  auto* estimate = app.add_subcommand("estimate", "Run IGPMC and/or MCMC and write a result directory");
  std::string e_config;
  std::string e_out;
  std::string e_case;
  std::string e_method;
  std::optional<std::uint64_t> e_seed;
  estimate->add_option("--config", e_config, "JSON experiment config");
  estimate->add_option("--out", e_out, "result directory (overrides the config)");
  estimate->add_option("--case", e_case, "case (overrides the config)");
  estimate->add_option("--method", e_method, "igpmc | mcmc | both (overrides the config)");
  estimate->add_option("--seed", e_seed, "seed (overrides the config)");

  auto* compare = app.add_subcommand("compare", "Compare two result directories");
  std::string c_a, c_b, c_json;
  compare->add_option("a", c_a)->required();
  compare->add_option("b", c_b)->required();
  compare->add_option("--json", c_json, "also write the report as JSON");

  auto* selftest = app.add_subcommand("gp-selftest", "Check the inverse GP against a dense reference");
  std::size_t s_problems = 100;
  std::uint64_t s_seed = 11;
  selftest->add_option("--problems", s_problems)->capture_default_str();
  selftest->add_option("--seed", s_seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (fixture->parsed()) {
      const json f = make_fixture(f_case, f_seed, f_canonical);
      const fs::path path = resolve_output(f_out);
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      const fs::path tmp = fs::path(path.string() + ".tmp");
      io::write_text(tmp, f.dump(2) + "\n");
      fs::rename(tmp, path);
      out << "wrote " << path.string() << '\n';
    } else if (estimate->parsed()) {
      json j = e_config.empty() ? json::object() : read_json_file(e_config);
      if (!e_case.empty()) j["case"] = e_case;
      if (!e_method.empty()) j["method"] = e_method;
      if (e_seed) j["seed"] = *e_seed;
      if (!e_out.empty()) j["output"] = e_out;
      const ExperimentConfig cfg = parse_config(j);
      if (cfg.output.empty()) config_error("no output directory given (--out or config 'output')");
      const json m = cmd_estimate(cfg, resolve_output(cfg.output));
      out << m.dump(2) << '\n';
      if (m.at("status") != "ok") {
        err << m.at("error").get<std::string>() << '\n';
        return kExitNumerical;
      }
    } else if (compare->parsed()) {
      const json r = cmd_compare(c_a, c_b);
      out << format_comparison(r);
      if (!c_json.empty()) io::write_text(resolve_output(c_json), r.dump(2) + "\n");
    } else if (selftest->parsed()) {
      const json r = gp_selftest(s_problems, s_seed);
      out << (r.at("pass").get<bool>() ? "PASS" : "FAIL") << " gp-selftest " << r.dump() << '\n';
      return r.at("pass").get<bool>() ? kExitOk : kExitNumerical;
    }
  } catch (const Error& e) {
    err << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "IoError: " << e.what() << '\n';
    return kExitIo;
  } catch (const json::exception& e) {
    err << "InvalidConfig: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}

}  // namespace igpmc::cli
