#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lhfi/sampler.hpp"

namespace lhfi {

struct SyntheticSpec {
  int n = 60, p = 6, k = 3;
  Variant variant = Variant::B;
  bool spatial = true;
  std::uint64_t seed = 0;
  bool draw_from_priors = false;  // otherwise the fixed truths below

  double beta0 = 0.0;
  double beta1 = 0.5;
  double sigma2_h = 0.2;
  double phi = 1.5;
  Eigen::VectorXd gamma_true;  // defaulted when empty
  Eigen::VectorXd xi_true;
  Eigen::VectorXd a_true;

  PriorConfig priors;  // used by the prior-draw mode and the anchor
  double nugget = 1e-8;
};

struct SyntheticResult {
  Dataset dataset;
  ChainState truth;  // on the standardized scale of the emitted dataset
  Eigen::VectorXd y_shift, y_scale;  // recorded standardization maps
};

// Forward simulation: T from the logistic model (B), H from the spatial
// field, Y from the factor model; Y columns are standardized and the truth
// is mapped onto the standardized scale.
SyntheticResult generate_synthetic(const SyntheticSpec& spec);

// --- Geweke joint-distribution test ---

struct GewekeFunctionResult {
  std::string name;
  double mean_marginal = 0, se_marginal = 0;
  double mean_successive = 0, se_successive = 0;
  double z = 0;
};

struct GewekeReport {
  std::vector<GewekeFunctionResult> functions;
  // Set when the successive-conditional chain left the representable range
  // (a defective sweep can explode); counts as an unbounded discrepancy.
  bool diverged = false;
  long diverged_at = -1;
  double max_abs_z() const;
  bool pass(double z_limit = 4.0) const;
};

struct GewekeOptions {
  Variant variant = Variant::A;
  long replicas = 100000;
  std::uint64_t seed = 1;
  Mutation mutation = Mutation::kNone;
  int n = 4, p = 2, k = 1;
  double phi_proposal_sd = 0.6;
  double gamma_proposal_sd = 0.6;
  // exercise the grouped/collapsed fast paths instead of the plain sweep
  bool block_h = false;
  bool block_mean = false;
  bool collapse = false;
};

// Compares the marginal-conditional simulator against the
// successive-conditional simulator built from the production sweep. The
// propensity stage of variant B is cut from the outcome model, so it is
// exercised as its own simulator pair (gamma updates against T redraws);
// the outcome stage runs with the design (T, gamma) held fixed.
GewekeReport geweke_test(const GewekeOptions& options);

// Desk-scale dataset and moderated config used by the Geweke suite; the
// priors keep every test function's fourth moment finite.
Dataset make_desk_dataset(int n, int p, int k, std::uint64_t seed);
ModelConfig make_desk_config(Variant variant, int p);

// --- grid oracle ---

struct GridAxis {
  std::string param;  // "H:<country>", "a:<j>", "beta:<j>", "xi:<j>",
                      // "sigma2_H", "phi"
  double lo = 0, hi = 1;
  int points = 0;
};

struct GridMarginal {
  std::string param;
  double mean = 0, sd = 0;
};

struct GridOracleResult {
  std::vector<GridMarginal> marginals;
  double mass_sum = 0;  // of normalized masses; 1 up to roundoff
  long total_points = 0;
};

// Exhaustive normalized evaluation of the joint over the axes, every other
// coordinate frozen at `frozen`. Total grid size is capped at 1e7.
GridOracleResult grid_oracle(const Dataset& ds, const ModelConfig& config,
                             const ChainState& frozen,
                             const std::vector<GridAxis>& axes);

double get_state_param(const ChainState& s, const std::string& param);
void set_state_param(ChainState& s, const std::string& param, double v);

struct OracleComparison {
  std::string instance;
  std::string param;
  double grid_mean = 0, grid_sd = 0;
  double mcmc_mean = 0, mcse = 0;
  bool pass = false;  // |grid_mean - mcmc_mean| <= 3 * mcse
};

// Three frozen tiny instances (at most 3 free field sites, scalar loading):
// the masked sampler against the quadrature oracle on the same sub-model.
std::vector<OracleComparison> run_oracle_suite(std::uint64_t seed = 0,
                                               long sweeps = 50000);

// --- unit self-checks (CLI `validate --suite units`) ---

struct UnitCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

std::vector<UnitCheck> unit_suite();

}  // namespace lhfi
