#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "igpmc/estimator.hpp"
#include "igpmc/mcmc.hpp"

namespace igpmc::io {

using numerics::Matrix;
using numerics::Vector;

/// Shortest round-trip form with 17 significant digits.
std::string format_double(double x);

nlohmann::json to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& j);

/// samples.csv: sample_id, cluster_id, m_1..m_n.
void write_samples_csv(std::ostream& out, const Matrix& samples, const std::vector<int>& cluster);

struct SampleTable {
  Matrix samples;
  std::vector<int> cluster;
  std::vector<std::string> columns;  // parameter columns only
};
SampleTable read_samples_csv(std::istream& in);

/// trace.csv: iteration, eval_index, m_1.., F_1.., D.
void write_trace_csv(std::ostream& out, const estimator::BasePointPool& pool);

/// Chain trace: chain_id, step, m_1.., logL.
void write_chain_csv(std::ostream& out, const mcmc::McmcResult& result);

/// Writes a text file, throwing IoError on failure.
void write_text(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

/// 64-bit FNV-1a of a string, as 16 hex digits.
std::string fnv1a_hex(const std::string& data);

/// Output directory staged next to its final location and renamed into place
/// on commit(). Dropped without commit, the staging directory is removed.
class StagedDirectory {
 public:
  explicit StagedDirectory(std::filesystem::path target);
  ~StagedDirectory();
  StagedDirectory(const StagedDirectory&) = delete;
  StagedDirectory& operator=(const StagedDirectory&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const { return staging_; }
  void commit();

 private:
  std::filesystem::path target_;
  std::filesystem::path staging_;
  bool committed_ = false;
};

}  // namespace igpmc::io
