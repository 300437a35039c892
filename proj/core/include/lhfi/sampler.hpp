#pragma once

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lhfi/model.hpp"

namespace lhfi {

// Deliberate sampler defects, selectable for validating that the Geweke
// harness has the power to catch exactly these mistakes. Production runs
// always use kNone.
enum class Mutation {
  kNone,
  kHMeanDropsSigmaYInverse,        // H-site linear term uses Sigma_Y a
  kAMeanDropsSigmaYInverse,        // loading linear term uses Sigma_Y Y'H
  kBetaUsesSigmaHNotInverse,       // beta precision built from Sigma_H itself
  kSigma2HRateIgnoresCorrelation,  // rate sum D_i^2/2 even when R != I
  kSigma2HCountsAnchor,            // shape N/2 instead of (N-1)/2
  kPhiTargetsProductDensity,       // product of site conditionals as target
};

Mutation mutation_from_name(const std::string& token);
std::string mutation_name(Mutation m);
std::vector<Mutation> all_mutations();

// Which blocks a sweep updates; frozen blocks keep their current values
// (used by the grid-oracle and conjugate-step checks).
struct UpdateMask {
  bool h = true;
  bool anchor_h = true;
  bool a = true;
  bool sigma_y = true;
  bool sigma2_h = true;
  bool beta = true;
  bool phi = true;
  bool xi = true;
  bool gamma = true;
};

struct SamplerOptions {
  Mutation mutation = Mutation::kNone;
  bool block_h_update = false;  // joint field draw, same stationary law
  // Variant B: draw (beta, xi) from their joint Gaussian conditional
  // instead of two alternating blocks. The treatment column, the tertile
  // indicators and the intercept are strongly collinear, so the grouped
  // draw mixes far better; the stationary law is identical.
  bool block_mean_update = false;
  // Collapsed grouped draws, same stationary law, far shorter
  // autocorrelation times at scale:
  //  - coefficients from their conditional with the latent field integrated
  //    out, then the field redrawn given the new coefficients (a joint
  //    (theta, H_field) block);
  //  - the range parameter by Metropolis on the sigma2_H-marginalized
  //    conditional (the inverse-gamma prior integrates out in closed
  //    form), then sigma2_H redrawn given the new range;
  //  - a scale group move (a, H, beta, xi, sigma2_H) ->
  //    (la, H/l, beta/l, xi/l, sigma2_H/l^2), Metropolis on log l with the
  //    orbit Jacobian. The metric level is exactly invariant along the
  //    orbit and only the anchor pins the scale, so without this move the
  //    scale direction crawls through the single anchor conditional.
  bool collapse = false;
  UpdateMask mask;
};

struct McmcConfig {
  long iterations = 250000;
  long burn_in = 50000;
  long thin = 1;
  int chains = 1;
  std::uint64_t seed = 0;
  double phi_proposal_sd = 0.5;    // log-scale random walk
  double gamma_proposal_sd = 0.1;  // joint normal walk
  bool adapt = true;
  long checkpoint_every = 0;  // 0 disables
  bool block_h = false;
  bool block_mean = false;
  bool collapse = false;

  void validate() const;
  std::string to_json() const;
  static McmcConfig from_json(const std::string& text);
  static McmcConfig load(const std::string& path);
};

// One substream per conditional so a block's consumption never shifts
// another block's draws; in particular the gamma stream is untouched by
// anything that sees Y.
struct ChainStreams {
  RngStream init, h, a, sigma_y, sigma2_h, beta, phi, xi, gamma, data, scale;

  static ChainStreams make(std::uint64_t seed, int chain_id);
};

struct HSiteConditional {
  double mean = 0.0;
  double var = 0.0;
};

struct MvnConditional {
  Eigen::VectorXd linear;  // precision * mean
  SpdMatrix precision;

  Eigen::VectorXd mean() const { return precision.solve(linear); }
};

struct InvGammaConditional {
  double shape = 0.0;
  double rate = 0.0;
};

struct InvWishartConditional {
  double dof = 0.0;
  Eigen::MatrixXd scale;
};

// Metropolis-within-Gibbs engine. Sweep order: H, a, Sigma_Y, sigma2_H,
// beta, phi, then xi and gamma for variant B; within the H step, sites
// are visited in country index order.
class GibbsSampler {
 public:
  GibbsSampler(const Dataset& ds, ModelConfig config, SamplerOptions opts = {});

  const ChainState& state() const { return state_; }
  void set_state(ChainState s);

  // H standard normal, a from its prior, Sigma_Y identity, beta 0,
  // sigma2_H 0.1, phi exp(0.4), gamma 0, xi 0.
  void init_state(RngStream& rng);

  struct SweepResult {
    bool phi_proposed = false, phi_accepted = false;
    bool gamma_proposed = false, gamma_accepted = false;
    double phi_alpha = 0.0, gamma_alpha = 0.0;
  };
  SweepResult sweep(ChainStreams& streams, double phi_proposal_sd,
                    double gamma_proposal_sd);

  void step_h(RngStream& rng);
  void step_a(RngStream& rng);
  void step_sigma_y(RngStream& rng);
  void step_sigma2_h(RngStream& rng);
  void step_beta(RngStream& rng);
  // Grouped (beta, xi) draw for variant B under block_mean_update.
  void step_mean(RngStream& rng);
  // Joint (coefficients, field) draw with H integrated out of the
  // coefficient conditional (collapse).
  void step_mean_collapsed(RngStream& rng);
  // Range move on the sigma2-marginal conditional plus the exact
  // sigma2 | phi redraw (collapse).
  bool step_phi_sigma_collapsed(RngStream& phi_rng, RngStream& sigma_rng,
                                double proposal_sd, double* alpha = nullptr);
  double phi_marginal_log_target(double phi) const;
  // Scale group move along (a, H, beta, xi, sigma2_H) (collapse).
  bool step_scale(RngStream& rng, double proposal_sd = 0.2);
  bool step_phi(RngStream& rng, double proposal_sd, double* alpha = nullptr);
  void step_xi(RngStream& rng);
  bool step_gamma(RngStream& rng, double proposal_sd, double* alpha = nullptr);

  // Full-conditional parameters at the current state, for closed-form
  // verification.
  HSiteConditional h_site_conditional(int country) const;
  MvnConditional a_conditional() const;
  InvWishartConditional sigma_y_conditional() const;
  InvGammaConditional sigma2_h_conditional() const;
  MvnConditional beta_conditional() const;
  MvnConditional xi_conditional() const;
  MvnConditional mean_conditional() const;  // joint (beta, xi), variant B

  double phi_log_target(double phi) const;
  double gamma_log_target(const Eigen::VectorXd& gamma) const;

  const Dataset& dataset() const { return ds_; }
  const ModelConfig& config() const { return config_; }
  const std::vector<int>& field() const { return field_; }
  int anchor() const { return anchor_; }

 private:
  void ensure_sigma_y_cache() const;
  void ensure_spatial_cache() const;
  Eigen::VectorXd field_mean() const;  // H-level mean on field rows

  const Dataset& ds_;
  ModelConfig config_;
  SamplerOptions opts_;
  ChainState state_;

  std::vector<int> field_;      // countries in the spatial field
  int anchor_ = -1;             // -1 when unanchored
  Eigen::MatrixXd d_field_;     // field distances, model units
  Eigen::MatrixXd w_design_;    // variant design matrix, all rows

  mutable bool sigma_y_dirty_ = true;
  mutable Eigen::MatrixXd sigma_y_inv_;
  mutable bool spatial_dirty_ = true;
  mutable SpdMatrix r_field_;       // R + nugget I on the field
  mutable Eigen::MatrixXd r_inv_;   // its inverse (Cholesky solve of I)
};

struct ChainSamples {
  int chain_id = 0;
  long kept = 0;
  std::map<std::string, Eigen::MatrixXd> blocks;  // draws x dim
  double phi_accept_rate = 0.0;
  double gamma_accept_rate = 0.0;
  double phi_proposal_sd = 0.0;    // after adaptation froze
  double gamma_proposal_sd = 0.0;
};

struct PosteriorSamples {
  Variant variant = Variant::A;
  bool spatial = true;
  bool anchored = true;
  std::vector<std::string> block_names;
  std::map<std::string, std::vector<std::string>> columns;
  std::vector<ChainSamples> chains;

  long draws_per_chain() const;
  long total_draws() const;
  bool has_block(const std::string& block) const;
  // All chains stacked, draws x dim.
  Eigen::MatrixXd pooled_block(const std::string& block) const;
  // Column addressed as an exact label ("phi") or block[index] ("H[3]").
  Eigen::VectorXd pooled_column(const std::string& name) const;
  Eigen::VectorXd chain_column(int chain, const std::string& name) const;
  std::vector<std::string> scalar_names() const;  // block[i] for every column
};

// Block layout (names and column labels) implied by dataset and config.
std::vector<std::pair<std::string, std::vector<std::string>>> sample_schema(
    const Dataset& ds, const ModelConfig& config);

// Runs one chain: init, burn-in with Robbins-Monro proposal adaptation
// (frozen after burn-in), thinned recording, optional checkpointing.
class ChainRunner {
 public:
  ChainRunner(const Dataset& ds, const ModelConfig& model,
              const McmcConfig& mcmc, int chain_id, SamplerOptions opts = {});

  void set_checkpoint_path(const std::string& path, long every);
  // Load a checkpoint written by an identical configuration; returns false
  // when the file does not exist.
  bool resume_from(const std::string& path);
  // Advance up to `stop_after` total iterations (defaults to the full run).
  void run(std::optional<long> stop_after = std::nullopt);
  bool finished() const;

  const ChainSamples& samples() const { return samples_; }
  const GibbsSampler& sampler() const { return sampler_; }
  long iteration() const { return iteration_; }

 private:
  void record_draw();
  void write_checkpoint() const;
  void check_health();

  const Dataset& ds_;
  ModelConfig model_;
  McmcConfig mcmc_;
  SamplerOptions opts_;
  GibbsSampler sampler_;
  ChainStreams streams_;
  ChainSamples samples_;
  long iteration_ = 0;
  double log_phi_sd_ = 0.0;
  double log_gamma_sd_ = 0.0;
  long phi_accepts_ = 0, phi_proposals_ = 0;
  long gamma_accepts_ = 0, gamma_proposals_ = 0;
  std::string checkpoint_path_;
  long checkpoint_every_ = 0;
  long kept_capacity_ = 0;
};

// All chains of one fit (sequential helper; the CLI fans out threads).
PosteriorSamples run_chains(const Dataset& ds, const ModelConfig& model,
                            const McmcConfig& mcmc,
                            SamplerOptions opts = {});

}  // namespace lhfi
