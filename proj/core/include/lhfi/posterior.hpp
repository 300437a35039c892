#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "lhfi/sampler.hpp"

namespace lhfi {

// Type-7 empirical quantile (linear interpolation of order statistics).
double quantile_type7(std::vector<double> values, double p);

struct SummaryRow {
  std::string name;
  double mean = 0, median = 0, q025 = 0, q975 = 0;
};

struct SummaryReport {
  std::vector<SummaryRow> rows;
  const SummaryRow& row(const std::string& name) const;
};

SummaryRow summarize_draws(const std::string& name, const Eigen::VectorXd& draws);

// Requires at least 100 pooled draws; unknown names throw.
SummaryReport summarize(const PosteriorSamples& samples,
                        const std::vector<std::string>& names);

// P(draws_i > draws_j), strict inequality; ties contribute nothing.
double dominance_probability(const Eigen::VectorXd& draws_i,
                             const Eigen::VectorXd& draws_j);

struct TreatmentEffectReport {
  double median = 0, q025 = 0, q975 = 0;
  double p_positive = 0;
  double p_greater_ref = 0;
  double ref = 0;
  bool causal = false;  // variant B fits report the causal effect
};

TreatmentEffectReport treatment_effect_report(const PosteriorSamples& samples,
                                              double ref = 0.0);

struct CorrelationCurveRow {
  double d = 0;
  double mean = 0, median = 0, q025 = 0, q975 = 0;
  std::vector<double> p_over;  // aligned with the threshold list
};

std::vector<CorrelationCurveRow> correlation_curve(
    const Eigen::VectorXd& phi_draws, const Eigen::VectorXd& d_grid,
    const std::vector<double>& thresholds = {0.1, 0.2});

// Posterior-median residuals H_hat - W beta_hat for the iid base fit.
Eigen::VectorXd h_residuals(const PosteriorSamples& samples, const Dataset& ds);

// Geyer initial-monotone-sequence effective sample size of one chain.
double effective_sample_size(const Eigen::VectorXd& chain);

// Asymptotic standard error of the chain mean (sd * sqrt(1/ESS)).
double mcmc_se(const Eigen::VectorXd& chain);

// Split-Rhat over the given chains (each split in half). Set
// rank_normalize for the rank-based variant.
double split_rhat(const std::vector<Eigen::VectorXd>& chains,
                  bool rank_normalize = false);

// Mean of first 10% vs last 50% with ESS-based standard errors.
double geweke_z(const Eigen::VectorXd& chain);

struct DiagnosticsRow {
  std::string name;
  double ess = 0;
  double split_rhat = 0;
  double geweke_z = 0;
};

std::vector<DiagnosticsRow> diagnostics(const PosteriorSamples& samples,
                                        const std::vector<std::string>& names);

struct RankRow {
  int rank = 0;
  std::string id, name, income_group;
  double median = 0, q025 = 0, q975 = 0;
};

// Countries by descending posterior median H; ties break on id.
std::vector<RankRow> rank_report(const PosteriorSamples& samples,
                                 const Dataset& ds);

// Full pairwise dominance matrix over countries, entry (i,j) = P(H_i > H_j).
Eigen::MatrixXd dominance_matrix(const PosteriorSamples& samples);

}  // namespace lhfi
