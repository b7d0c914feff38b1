#include "igpmc/io.hpp"

#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace igpmc::io {

namespace fs = std::filesystem;

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

nlohmann::json to_json(const Vector& v) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

Vector vector_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(ErrorCode::kInvalidConfig, "expected a numeric array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw Error(ErrorCode::kInvalidConfig, "expected a numeric array");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

void write_samples_csv(std::ostream& out, const Matrix& samples, const std::vector<int>& cluster) {
  out << "sample_id,cluster_id";
  for (Eigen::Index j = 0; j < samples.cols(); ++j) out << ",m_" << j + 1;
  out << '\n';
  for (Eigen::Index r = 0; r < samples.rows(); ++r) {
    out << r << ',' << cluster[static_cast<std::size_t>(r)];
    for (Eigen::Index j = 0; j < samples.cols(); ++j) out << ',' << format_double(samples(r, j));
    out << '\n';
  }
}

SampleTable read_samples_csv(std::istream& in) {
  SampleTable t;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kIoError, "samples file is empty");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 3 || header[0] != "sample_id" || header[1] != "cluster_id") {
    throw Error(ErrorCode::kIoError, "samples header must start with sample_id,cluster_id");
  }
  t.columns.assign(header.begin() + 2, header.end());
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    int col = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        if (col == 1) t.cluster.push_back(std::stoi(cell));
        if (col >= 2) row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error(ErrorCode::kIoError, "non-numeric value in samples file");
      }
      ++col;
    }
    if (row.size() != t.columns.size()) throw Error(ErrorCode::kIoError, "ragged samples file");
    rows.push_back(std::move(row));
  }
  t.samples.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.columns.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t j = 0; j < rows[r].size(); ++j) {
      t.samples(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = rows[r][j];
    }
  }
  return t;
}

void write_trace_csv(std::ostream& out, const estimator::BasePointPool& pool) {
  out << "iteration,eval_index";
  if (!pool.entries.empty()) {
    for (Eigen::Index j = 0; j < pool.entries.front().m.size(); ++j) out << ",m_" << j + 1;
    for (Eigen::Index j = 0; j < pool.entries.front().f.size(); ++j) out << ",F_" << j + 1;
  }
  out << ",D\n";
  for (std::size_t k = 0; k < pool.entries.size(); ++k) {
    const auto& e = pool.entries[k];
    out << e.iteration << ',' << k;
    for (Eigen::Index j = 0; j < e.m.size(); ++j) out << ',' << format_double(e.m[j]);
    for (Eigen::Index j = 0; j < e.f.size(); ++j) out << ',' << format_double(e.f[j]);
    out << ',' << format_double(e.D) << '\n';
  }
}

void write_chain_csv(std::ostream& out, const mcmc::McmcResult& result) {
  out << "chain_id,step";
  const Eigen::Index dim = result.chains.empty() ? 0 : result.chains.front().cols();
  for (Eigen::Index j = 0; j < dim; ++j) out << ",m_" << j + 1;
  out << ",logL\n";
  for (std::size_t c = 0; c < result.chains.size(); ++c) {
    const Matrix& ch = result.chains[c];
    for (Eigen::Index t = 0; t < ch.rows(); ++t) {
      out << c << ',' << t;
      for (Eigen::Index j = 0; j < dim; ++j) out << ',' << format_double(ch(t, j));
      out << ',' << format_double(result.log_like[c][static_cast<std::size_t>(t)]) << '\n';
    }
  }
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIoError, "cannot open " + path.string() + " for writing");
  f << content;
  if (!f) throw Error(ErrorCode::kIoError, "failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

StagedDirectory::StagedDirectory(fs::path target) : target_(std::move(target)) {
  if (target_.filename().empty()) target_ = target_.parent_path();
  staging_ = target_;
  staging_ += ".staging-" + std::to_string(::getpid());
  std::error_code ec;
  fs::remove_all(staging_, ec);
  if (!fs::create_directories(staging_, ec) || ec) {
    throw Error(ErrorCode::kIoError, "cannot create staging directory " + staging_.string());
  }
}

StagedDirectory::~StagedDirectory() {
  if (!committed_) {
    std::error_code ec;
    fs::remove_all(staging_, ec);
  }
}

void StagedDirectory::commit() {
  std::error_code ec;
  fs::remove_all(target_, ec);
  fs::rename(staging_, target_, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot move results into " + target_.string());
  committed_ = true;
}

}  // namespace igpmc::io
