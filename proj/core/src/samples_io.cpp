#include "lhfi/samples_io.hpp"

#include <chrono>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lhfi/ingest.hpp"

namespace lhfi {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr char kMatrixMagic[8] = {'L', 'H', 'F', 'I', 'M', 'A', 'T', '1'};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json manifest_skeleton(const ModelConfig& model, const McmcConfig& mcmc,
                       std::uint64_t dataset_hash,
                       const std::string& started_at) {
  json j;
  j["format"] = "lhfi-samples";
  j["format_version"] = 1;
  j["engine_version"] = "0.1.0";
  j["seed"] = mcmc.seed;
  j["chains"] = mcmc.chains;
  j["model_config"] = json::parse(model.to_json());
  j["mcmc_config"] = json::parse(mcmc.to_json());
  j["config_hash"] = hex64(fnv1a64(model.to_json() + mcmc.to_json()));
  j["dataset_hash"] = hex64(dataset_hash);
  j["started_at"] = started_at;
  return j;
}

}  // namespace

void write_matrix_file(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write matrix file: " + path);
  out.write(kMatrixMagic, sizeof kMatrixMagic);
  const std::int64_t rows = m.rows(), cols = m.cols();
  out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
}

Eigen::MatrixXd read_matrix_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open matrix file: " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (std::memcmp(magic, kMatrixMagic, sizeof magic) != 0)
    throw Error("not a sample matrix file: " + path);
  std::int64_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), sizeof rows);
  in.read(reinterpret_cast<char*>(&cols), sizeof cols);
  if (rows < 0 || cols < 0) throw Error("corrupt matrix file: " + path);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      double v;
      in.read(reinterpret_cast<char*>(&v), sizeof v);
      m(i, j) = v;
    }
  if (!in) throw Error("truncated matrix file: " + path);
  return m;
}

void write_prelim_manifest(const std::string& dir, const ModelConfig& model,
                           const McmcConfig& mcmc, std::uint64_t dataset_hash,
                           const std::string& started_at) {
  fs::create_directories(dir);
  json j = manifest_skeleton(model, mcmc, dataset_hash, started_at);
  j["status"] = "running";
  std::ofstream out(fs::path(dir) / "manifest.json");
  out << j.dump(2) << "\n";
}

void save_samples(const std::string& dir, const PosteriorSamples& samples,
                  const ModelConfig& model, const McmcConfig& mcmc,
                  std::uint64_t dataset_hash, const std::string& started_at,
                  const std::string& finished_at) {
  fs::create_directories(dir);
  json j = manifest_skeleton(model, mcmc, dataset_hash, started_at);
  j["status"] = "complete";
  j["finished_at"] = finished_at;
  json blocks = json::array();
  for (const auto& name : samples.block_names)
    blocks.push_back({{"name", name}, {"columns", samples.columns.at(name)}});
  j["blocks"] = blocks;
  json chains = json::array();
  for (const auto& c : samples.chains) {
    chains.push_back({{"chain_id", c.chain_id},
                      {"kept", c.kept},
                      {"phi_accept_rate", c.phi_accept_rate},
                      {"gamma_accept_rate", c.gamma_accept_rate},
                      {"phi_proposal_sd", c.phi_proposal_sd},
                      {"gamma_proposal_sd", c.gamma_proposal_sd}});
    const fs::path cdir = fs::path(dir) / ("chain_" + std::to_string(c.chain_id));
    fs::create_directories(cdir);
    for (const auto& name : samples.block_names)
      write_matrix_file((cdir / (name + ".bin")).string(),
                        c.blocks.at(name).topRows(c.kept));
  }
  j["chains_info"] = chains;
  std::ofstream out(fs::path(dir) / "manifest.json");
  out << j.dump(2) << "\n";
}

LoadedSamples load_samples(const std::string& dir) {
  const std::string text = read_file((fs::path(dir) / "manifest.json").string());
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw Error("invalid manifest JSON in " + dir);
  if (j.value("status", "") != "complete")
    throw Error("samples directory is not a completed run: " + dir);

  LoadedSamples out;
  out.manifest_text = text;
  out.model = ModelConfig::from_json(j.at("model_config").dump());
  out.mcmc = McmcConfig::from_json(j.at("mcmc_config").dump());
  out.samples.variant = out.model.variant;
  out.samples.spatial = out.model.spatial;
  out.samples.anchored = out.model.anchored;
  for (const auto& b : j.at("blocks")) {
    const std::string name = b.at("name").get<std::string>();
    out.samples.block_names.push_back(name);
    out.samples.columns[name] = b.at("columns").get<std::vector<std::string>>();
  }
  for (const auto& c : j.at("chains_info")) {
    ChainSamples cs;
    cs.chain_id = c.at("chain_id").get<int>();
    cs.kept = c.at("kept").get<long>();
    cs.phi_accept_rate = c.at("phi_accept_rate").get<double>();
    cs.gamma_accept_rate = c.at("gamma_accept_rate").get<double>();
    cs.phi_proposal_sd = c.at("phi_proposal_sd").get<double>();
    cs.gamma_proposal_sd = c.at("gamma_proposal_sd").get<double>();
    const fs::path cdir = fs::path(dir) / ("chain_" + std::to_string(cs.chain_id));
    for (const auto& name : out.samples.block_names) {
      cs.blocks[name] = read_matrix_file((cdir / (name + ".bin")).string());
      if (cs.blocks[name].rows() != cs.kept)
        throw Error("block rows disagree with manifest: " + name);
    }
    out.samples.chains.push_back(std::move(cs));
  }
  return out;
}

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace lhfi
