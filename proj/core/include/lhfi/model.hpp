#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "lhfi/ingest.hpp"
#include "lhfi/stochastics.hpp"

namespace lhfi {

enum class Variant { A, B };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& s);

struct PriorConfig {
  double loading_var = 100.0;
  double beta_var = 100.0;
  double xi_var = 100.0;
  double gamma_var = 100.0;
  double sigma_y_dof = 0.0;  // 0 resolves to P + 2
  double sigma_h_shape = 1.0;
  double sigma_h_scale = 0.1;
  double phi_log_mu = 0.4;
  double phi_log_sigma = 2.0;
  double anchor_mean = -2.0;
  double anchor_var = 0.1;

  double resolved_sigma_y_dof(int p) const {
    return sigma_y_dof > 0.0 ? sigma_y_dof : p + 2.0;
  }
  void validate(int p) const;
};

struct ModelConfig {
  Variant variant = Variant::A;
  bool spatial = true;    // exponential kernel; false gives the iid base model
  bool anchored = true;   // false only for pilot runs
  std::string anchor_id;  // overrides the dataset anchor when set
  PriorConfig priors;
  double nugget = 1e-8;
  std::string distance_unit = "Mm";  // "Mm" or "km"

  double distance_factor() const;
  int resolved_anchor(const Dataset& ds) const;

  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
  static ModelConfig load(const std::string& path);
};

// One full parameter snapshot. For variant B the propensity fields
// (z, q1, q2, g) are deterministic functions of gamma, refreshed by
// refresh_propensity after every gamma move.
struct ChainState {
  Eigen::VectorXd H;     // N
  Eigen::VectorXd a;     // P
  SpdMatrix Sigma_Y;     // P x P
  Eigen::VectorXd beta;  // A: intercept, T, covariates; B: intercept, T
  double sigma2_H = 1.0;
  double phi = 1.0;
  Eigen::VectorXd gamma;  // K (B only)
  Eigen::VectorXd xi;     // 2 (B only)
  double q1 = 0.0, q2 = 0.0;
  Eigen::VectorXd z;  // N propensity scores (B only)
  Eigen::MatrixXd g;  // N x 2 subclass indicators (B only)

  bool finite() const;
};

// rho = exp(-d/phi), the exponential (simplest Matern) kernel.
double spatial_correlation(double d, double phi);

// R(D, phi) + nugget * I over the given distance matrix.
SpdMatrix build_correlation(const Eigen::MatrixXd& d_sub, double phi,
                            double nugget);

// sigma2 * (R + nugget * I).
SpdMatrix build_sigma_h(const Eigen::MatrixXd& d_sub, double sigma2_h,
                        double phi, double nugget);

// Standard logistic of X gamma, clamped to [1e-12, 1 - 1e-12].
Eigen::VectorXd propensity_scores(const Eigen::MatrixXd& x,
                                  const Eigen::VectorXd& gamma);

// Empirical tertile knots: order statistics at ranks floor(N/3)+1 and
// floor(2N/3)+1 (1-based), which split 3m values exactly m/m/m.
std::pair<double, double> tertile_knots(const Eigen::VectorXd& z);

// [0,0] below q1, [1,0] in [q1,q2), [0,1] at or above q2.
Eigen::Vector2d subclass_indicator(double z_i, double q1, double q2);

Eigen::MatrixXd subclass_matrix(const Eigen::VectorXd& z, double q1, double q2);

// Recompute z, knots and g from the current gamma.
void refresh_propensity(ChainState& state, const Dataset& ds);

std::array<int, 3> subclass_sizes(const Eigen::MatrixXd& g);

// Variant design matrix: A -> [1, T, X]; B -> [1, T].
Eigen::MatrixXd design_matrix(const Dataset& ds, Variant variant);

// H-level mean over all N rows (the anchor row is computed but unused by
// the field density).
Eigen::VectorXd h_level_mean(const ChainState& state, const Dataset& ds,
                             Variant variant);

// Countries except the anchor, in index order; with anchored=false all N.
std::vector<int> field_indices(const Dataset& ds, const ModelConfig& config);

Eigen::VectorXd subset(const Eigen::VectorXd& v, const std::vector<int>& idx);
Eigen::MatrixXd subset_rows(const Eigen::MatrixXd& m,
                            const std::vector<int>& idx);
Eigen::MatrixXd subset_square(const Eigen::MatrixXd& m,
                              const std::vector<int>& idx);

// Additive pieces of the joint log density. The treatment block depends
// on (T, X, gamma) only: the propensity model never sees Y or H.
struct LogJointBreakdown {
  double y_level = 0.0;
  double h_level = 0.0;
  double anchor = 0.0;
  double treatment = 0.0;
  double prior_a = 0.0;
  double prior_beta = 0.0;
  double prior_sigma_y = 0.0;
  double prior_sigma2_h = 0.0;
  double prior_phi = 0.0;
  double prior_gamma = 0.0;
  double prior_xi = 0.0;

  double total() const {
    return y_level + h_level + anchor + treatment + prior_a + prior_beta +
           prior_sigma_y + prior_sigma2_h + prior_phi + prior_gamma + prior_xi;
  }
};

LogJointBreakdown log_joint(const ChainState& state, const Dataset& ds,
                            const ModelConfig& config);

// Draw every parameter from its prior (used by the validation harness).
// A non-null fixed_gamma pins gamma instead of drawing it.
ChainState draw_state_from_priors(const Dataset& ds, const ModelConfig& config,
                                  RngStream& rng,
                                  const Eigen::VectorXd* fixed_gamma = nullptr);

}  // namespace lhfi
