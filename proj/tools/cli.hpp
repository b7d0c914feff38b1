#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "igpmc/cases.hpp"
#include "igpmc/error.hpp"

namespace igpmc::cli {

namespace fs = std::filesystem;

inline constexpr const char* kVersion = "igpmc 1.0.0";
inline constexpr const char* kFixtureSchema = "igpmc.fixture/1";

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitNumerical = 3,
  kExitIo = 4,
};

int exit_code_for(ErrorCode code);

/// Everything an `estimate` run needs. Built from JSON by parse_config.
struct ExperimentConfig {
  std::string case_name = "bimodal";
  std::string method = "igpmc";  // igpmc | mcmc | both
  std::uint64_t seed = 0;
  std::string output;            // result directory; relative paths sit under $IGPMC_OUTPUT_ROOT
  std::string fixture;           // optional measurement fixture
  bool error_known = true;
  std::size_t kde_points = 256;
  std::size_t threads = 1;
  estimator::IgpmcConfig igpmc;
  mcmc::McmcConfig mcmc;
  nlohmann::json custom;         // linear model definition for case "custom"
  nlohmann::json source;         // the validated input, for hashing
};

/// Validates keys and types, then layers the JSON over the case defaults.
/// Unknown keys anywhere raise InvalidConfig.
ExperimentConfig parse_config(const nlohmann::json& j);

/// Case setup with fixture, custom-model and error_known overrides applied.
cases::CaseSetup build_case(const ExperimentConfig& cfg);

/// Truth, measurements and noise description of a case as JSON.
nlohmann::json make_fixture(const std::string& case_name, std::uint64_t seed, bool canonical);

struct SampleSummary {
  std::vector<double> mean;
  std::vector<double> sd;
  std::vector<double> map;
};
SampleSummary summarize_samples(const numerics::Matrix& samples);

/// Runs the configured method(s) and writes the result directory atomically.
/// Returns the manifest.
nlohmann::json cmd_estimate(const ExperimentConfig& cfg, const fs::path& out_dir);

/// Compares two result directories (each holding samples.csv and summary.json).
nlohmann::json cmd_compare(const fs::path& a, const fs::path& b);
std::string format_comparison(const nlohmann::json& report);

/// Runs the inverse-GP oracle-equivalence suite.
nlohmann::json gp_selftest(std::size_t problems, std::uint64_t seed);

fs::path resolve_output(const std::string& path);

/// Full command-line entry point.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace igpmc::cli
