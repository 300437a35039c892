#pragma once

#include <string>

#include "lhfi/sampler.hpp"

namespace lhfi {

// On-disk layout of one fit:
//   <dir>/manifest.json            run metadata, block schema, acceptance
//   <dir>/chain_<k>/<block>.bin    row-major double matrix per block
// Matrix files carry the magic "LHFIMAT1" followed by i64 rows, i64 cols
// and the values; identical runs produce identical bytes.

void write_matrix_file(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_file(const std::string& path);

// Written when a fit starts; save_samples finalizes it.
void write_prelim_manifest(const std::string& dir, const ModelConfig& model,
                           const McmcConfig& mcmc, std::uint64_t dataset_hash,
                           const std::string& started_at);

void save_samples(const std::string& dir, const PosteriorSamples& samples,
                  const ModelConfig& model, const McmcConfig& mcmc,
                  std::uint64_t dataset_hash, const std::string& started_at,
                  const std::string& finished_at);

struct LoadedSamples {
  PosteriorSamples samples;
  ModelConfig model;
  McmcConfig mcmc;
  std::string manifest_text;
};

LoadedSamples load_samples(const std::string& dir);

std::string now_iso8601();

}  // namespace lhfi
