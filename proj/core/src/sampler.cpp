#include "lhfi/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lhfi/ingest.hpp"

namespace lhfi {

using nlohmann::json;

Mutation mutation_from_name(const std::string& token) {
  if (token.empty() || token == "none") return Mutation::kNone;
  if (token == "step_h") return Mutation::kHMeanDropsSigmaYInverse;
  if (token == "step_a") return Mutation::kAMeanDropsSigmaYInverse;
  if (token == "step_beta") return Mutation::kBetaUsesSigmaHNotInverse;
  if (token == "sigma2h_rate") return Mutation::kSigma2HRateIgnoresCorrelation;
  if (token == "sigma2h_count") return Mutation::kSigma2HCountsAnchor;
  if (token == "phi_product") return Mutation::kPhiTargetsProductDensity;
  throw Error("unknown mutation token: " + token);
}

std::string mutation_name(Mutation m) {
  switch (m) {
    case Mutation::kNone: return "none";
    case Mutation::kHMeanDropsSigmaYInverse: return "step_h";
    case Mutation::kAMeanDropsSigmaYInverse: return "step_a";
    case Mutation::kBetaUsesSigmaHNotInverse: return "step_beta";
    case Mutation::kSigma2HRateIgnoresCorrelation: return "sigma2h_rate";
    case Mutation::kSigma2HCountsAnchor: return "sigma2h_count";
    case Mutation::kPhiTargetsProductDensity: return "phi_product";
  }
  return "none";
}

std::vector<Mutation> all_mutations() {
  return {Mutation::kHMeanDropsSigmaYInverse,
          Mutation::kAMeanDropsSigmaYInverse,
          Mutation::kBetaUsesSigmaHNotInverse,
          Mutation::kSigma2HRateIgnoresCorrelation,
          Mutation::kSigma2HCountsAnchor,
          Mutation::kPhiTargetsProductDensity};
}

void McmcConfig::validate() const {
  if (iterations <= burn_in || burn_in < 0)
    throw Error("mcmc: need iterations > burn_in >= 0");
  if (thin < 1) throw Error("mcmc: thin must be >= 1");
  if (chains < 1) throw Error("mcmc: chains must be >= 1");
  if (phi_proposal_sd <= 0 || gamma_proposal_sd <= 0)
    throw Error("mcmc: proposal sds must be positive");
}

std::string McmcConfig::to_json() const {
  json j;
  j["iterations"] = iterations;
  j["burn_in"] = burn_in;
  j["thin"] = thin;
  j["chains"] = chains;
  j["seed"] = seed;
  j["phi_proposal_sd"] = phi_proposal_sd;
  j["gamma_proposal_sd"] = gamma_proposal_sd;
  j["adapt"] = adapt;
  j["checkpoint_every"] = checkpoint_every;
  j["block_h"] = block_h;
  j["block_mean"] = block_mean;
  j["collapse"] = collapse;
  return j.dump(2);
}

McmcConfig McmcConfig::from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw Error("invalid JSON in mcmc config");
  McmcConfig c;
  if (j.contains("iterations")) c.iterations = j["iterations"].get<long>();
  if (j.contains("burn_in")) c.burn_in = j["burn_in"].get<long>();
  if (j.contains("thin")) c.thin = j["thin"].get<long>();
  if (j.contains("chains")) c.chains = j["chains"].get<int>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("phi_proposal_sd")) c.phi_proposal_sd = j["phi_proposal_sd"].get<double>();
  if (j.contains("gamma_proposal_sd")) c.gamma_proposal_sd = j["gamma_proposal_sd"].get<double>();
  if (j.contains("adapt")) c.adapt = j["adapt"].get<bool>();
  if (j.contains("checkpoint_every")) c.checkpoint_every = j["checkpoint_every"].get<long>();
  if (j.contains("block_h")) c.block_h = j["block_h"].get<bool>();
  if (j.contains("block_mean")) c.block_mean = j["block_mean"].get<bool>();
  if (j.contains("collapse")) c.collapse = j["collapse"].get<bool>();
  c.validate();
  return c;
}

McmcConfig McmcConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open mcmc config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

ChainStreams ChainStreams::make(std::uint64_t seed, int chain_id) {
  const std::uint64_t base = static_cast<std::uint64_t>(chain_id) * 16;
  ChainStreams s;
  s.init = RngStream(seed, base + 0);
  s.h = RngStream(seed, base + 1);
  s.a = RngStream(seed, base + 2);
  s.sigma_y = RngStream(seed, base + 3);
  s.sigma2_h = RngStream(seed, base + 4);
  s.beta = RngStream(seed, base + 5);
  s.phi = RngStream(seed, base + 6);
  s.xi = RngStream(seed, base + 7);
  s.gamma = RngStream(seed, base + 8);
  s.data = RngStream(seed, base + 9);
  s.scale = RngStream(seed, base + 10);
  return s;
}

GibbsSampler::GibbsSampler(const Dataset& ds, ModelConfig config,
                           SamplerOptions opts)
    : ds_(ds), config_(std::move(config)), opts_(opts) {
  config_.priors.validate(ds_.p());
  anchor_ = config_.anchored ? config_.resolved_anchor(ds_) : -1;
  field_ = field_indices(ds_, config_);
  d_field_ = subset_square(ds_.D, field_) * config_.distance_factor();
  w_design_ = design_matrix(ds_, config_.variant);
}

void GibbsSampler::set_state(ChainState s) {
  if (s.H.size() != ds_.n() || s.a.size() != ds_.p() ||
      s.Sigma_Y.dim() != ds_.p() || s.beta.size() != w_design_.cols())
    throw Error("set_state: dimensions do not match dataset/variant");
  state_ = std::move(s);
  if (config_.variant == Variant::B) {
    if (state_.gamma.size() != ds_.k() || state_.xi.size() != 2)
      throw Error("set_state: variant B needs gamma (K) and xi (2)");
    refresh_propensity(state_, ds_);
  }
  sigma_y_dirty_ = true;
  spatial_dirty_ = true;
}

void GibbsSampler::init_state(RngStream& rng) {
  ChainState s;
  const int n = ds_.n(), p = ds_.p(), k = ds_.k();
  s.H.resize(n);
  for (int i = 0; i < n; ++i) s.H(i) = rng.normal();
  s.a.resize(p);
  for (int j = 0; j < p; ++j)
    s.a(j) = std::sqrt(config_.priors.loading_var) * rng.normal();
  s.Sigma_Y = SpdMatrix::identity(p);
  s.beta = Eigen::VectorXd::Zero(w_design_.cols());
  s.sigma2_H = 0.1;
  s.phi = std::exp(config_.priors.phi_log_mu);
  if (config_.variant == Variant::B) {
    s.gamma = Eigen::VectorXd::Zero(k);
    s.xi = Eigen::VectorXd::Zero(2);
  }
  set_state(std::move(s));
}

void GibbsSampler::ensure_sigma_y_cache() const {
  if (!sigma_y_dirty_) return;
  sigma_y_inv_ = state_.Sigma_Y.solve(
      Eigen::MatrixXd::Identity(ds_.p(), ds_.p()).eval());
  sigma_y_dirty_ = false;
}

void GibbsSampler::ensure_spatial_cache() const {
  if (!spatial_dirty_ || !config_.spatial) return;
  r_field_ = build_correlation(d_field_, state_.phi, config_.nugget);
  r_inv_ = r_field_.solve(Eigen::MatrixXd::Identity(
      static_cast<Eigen::Index>(field_.size()),
      static_cast<Eigen::Index>(field_.size())).eval());
  spatial_dirty_ = false;
}

Eigen::VectorXd GibbsSampler::field_mean() const {
  return subset(h_level_mean(state_, ds_, config_.variant), field_);
}

void GibbsSampler::step_h(RngStream& rng) {
  ensure_sigma_y_cache();
  if (config_.spatial) ensure_spatial_cache();
  const Eigen::VectorXd s = sigma_y_inv_ * state_.a;
  const double like_prec = state_.a.dot(s);
  const Eigen::VectorXd s_lin =
      opts_.mutation == Mutation::kHMeanDropsSigmaYInverse
          ? (state_.Sigma_Y.matrix() * state_.a).eval()
          : s;
  const Eigen::VectorXd mu = h_level_mean(state_, ds_, config_.variant);
  Eigen::VectorXd h_f = subset(state_.H, field_);
  Eigen::VectorXd mu_f = subset(mu, field_);

  std::vector<int> pos(ds_.n(), -1);
  for (size_t r = 0; r < field_.size(); ++r) pos[field_[r]] = static_cast<int>(r);

  if (opts_.block_h_update && opts_.mask.h) {
    // Joint field draw: precision c I + Q with Q the field precision.
    const auto f = static_cast<Eigen::Index>(field_.size());
    Eigen::MatrixXd lambda;
    Eigen::VectorXd b(f);
    if (config_.spatial) {
      lambda = r_inv_ / state_.sigma2_H;
      b = (r_inv_ * mu_f) / state_.sigma2_H;
    } else {
      lambda = Eigen::MatrixXd::Zero(f, f);
      lambda.diagonal().setConstant(1.0 / state_.sigma2_H);
      b = mu_f / state_.sigma2_H;
    }
    lambda.diagonal().array() += like_prec;
    for (Eigen::Index r = 0; r < f; ++r) b(r) += s_lin.dot(ds_.Y.row(field_[r]));
    h_f = mvn_sample_precision(SpdMatrix(lambda), b, rng);
    for (Eigen::Index r = 0; r < f; ++r) state_.H(field_[r]) = h_f(r);
    if (anchor_ >= 0 && opts_.mask.anchor_h) {
      const double prec = like_prec + 1.0 / config_.priors.anchor_var;
      const double lin = s_lin.dot(ds_.Y.row(anchor_)) +
                         config_.priors.anchor_mean / config_.priors.anchor_var;
      state_.H(anchor_) = lin / prec + rng.normal() / std::sqrt(prec);
    }
    return;
  }

  // Single-site Gibbs scan in country index order; each draw conditions on
  // the freshly updated neighbours.
  for (int i = 0; i < ds_.n(); ++i) {
    if (i == anchor_) {
      if (!opts_.mask.anchor_h) continue;
      const double prec = like_prec + 1.0 / config_.priors.anchor_var;
      const double lin = s_lin.dot(ds_.Y.row(i)) +
                         config_.priors.anchor_mean / config_.priors.anchor_var;
      state_.H(i) = lin / prec + rng.normal() / std::sqrt(prec);
      continue;
    }
    if (!opts_.mask.h) continue;
    const int r = pos[i];
    double q_rr, cond_lin;
    if (config_.spatial) {
      // Conditional of the field at site r from the precision identity:
      // H_r | H_-r ~ N(mu_r - Q_rr^{-1} sum_{j != r} Q_rj (H_j - mu_j), Q_rr^{-1}).
      q_rr = r_inv_(r, r) / state_.sigma2_H;
      const double t = r_inv_.row(r).dot(h_f - mu_f) / state_.sigma2_H;
      cond_lin = q_rr * mu_f(r) - (t - q_rr * (h_f(r) - mu_f(r)));
    } else {
      q_rr = 1.0 / state_.sigma2_H;
      cond_lin = mu_f(r) / state_.sigma2_H;
    }
    const double prec = like_prec + q_rr;
    const double lin = s_lin.dot(ds_.Y.row(i)) + cond_lin;
    const double draw = lin / prec + rng.normal() / std::sqrt(prec);
    state_.H(i) = draw;
    h_f(r) = draw;
  }
}

void GibbsSampler::step_a(RngStream& rng) {
  ensure_sigma_y_cache();
  const double sum_h2 = state_.H.squaredNorm();
  Eigen::MatrixXd v = sum_h2 * sigma_y_inv_;
  v.diagonal().array() += 1.0 / config_.priors.loading_var;
  const Eigen::VectorXd yth = ds_.Y.transpose() * state_.H;
  const Eigen::VectorXd b =
      opts_.mutation == Mutation::kAMeanDropsSigmaYInverse
          ? (state_.Sigma_Y.matrix() * yth).eval()
          : (sigma_y_inv_ * yth).eval();
  state_.a = mvn_sample_precision(SpdMatrix(std::move(v)), b, rng);
}

void GibbsSampler::step_sigma_y(RngStream& rng) {
  const auto cond = sigma_y_conditional();
  state_.Sigma_Y = inv_wishart_sample(cond.dof, SpdMatrix(cond.scale), rng);
  sigma_y_dirty_ = true;
}

void GibbsSampler::step_sigma2_h(RngStream& rng) {
  if (config_.spatial) ensure_spatial_cache();
  const Eigen::VectorXd d = subset(state_.H, field_) - field_mean();
  double quad;
  if (config_.spatial &&
      opts_.mutation != Mutation::kSigma2HRateIgnoresCorrelation) {
    quad = r_field_.inv_quad_form(d);
  } else {
    quad = d.squaredNorm();
  }
  double count = static_cast<double>(field_.size());
  if (opts_.mutation == Mutation::kSigma2HCountsAnchor && anchor_ >= 0)
    count += 1.0;
  const double shape = 0.5 * count + config_.priors.sigma_h_shape;
  const double rate = 0.5 * quad + config_.priors.sigma_h_scale;
  state_.sigma2_H = inv_gamma_sample(shape, rate, rng);
}

void GibbsSampler::step_beta(RngStream& rng) {
  if (config_.spatial) ensure_spatial_cache();
  const Eigen::MatrixXd wf = subset_rows(w_design_, field_);
  Eigen::VectorXd d = subset(state_.H, field_);
  if (config_.variant == Variant::B)
    d -= subset_rows(state_.g, field_) * state_.xi;

  Eigen::MatrixXd v;
  Eigen::VectorXd b;
  if (opts_.mutation == Mutation::kBetaUsesSigmaHNotInverse) {
    const Eigen::MatrixXd sigma_h =
        config_.spatial
            ? (state_.sigma2_H * r_field_.matrix()).eval()
            : (state_.sigma2_H *
               Eigen::MatrixXd::Identity(d.size(), d.size())).eval();
    v = wf.transpose() * sigma_h * wf;
    b = wf.transpose() * sigma_h * d;
  } else if (config_.spatial) {
    const Eigen::MatrixXd m = r_field_.solve(wf);
    v = wf.transpose() * m / state_.sigma2_H;
    b = m.transpose() * d / state_.sigma2_H;
  } else {
    v = wf.transpose() * wf / state_.sigma2_H;
    b = wf.transpose() * d / state_.sigma2_H;
  }
  v.diagonal().array() += 1.0 / config_.priors.beta_var;
  state_.beta = mvn_sample_precision(SpdMatrix(std::move(v)), b, rng);
}

MvnConditional GibbsSampler::mean_conditional() const {
  if (config_.variant != Variant::B)
    throw Error("mean_conditional: defined for variant B");
  if (config_.spatial) ensure_spatial_cache();
  const auto f = static_cast<Eigen::Index>(field_.size());
  Eigen::MatrixXd u(f, 4);  // [1, T, g1, g2] on the field rows
  u.leftCols(2) = subset_rows(w_design_, field_);
  u.rightCols(2) = subset_rows(state_.g, field_);
  const Eigen::VectorXd h_f = subset(state_.H, field_);
  Eigen::MatrixXd v;
  Eigen::VectorXd b;
  if (config_.spatial) {
    const Eigen::MatrixXd m = r_field_.solve(u);
    v = u.transpose() * m / state_.sigma2_H;
    b = m.transpose() * h_f / state_.sigma2_H;
  } else {
    v = u.transpose() * u / state_.sigma2_H;
    b = u.transpose() * h_f / state_.sigma2_H;
  }
  v.diagonal().head(2).array() += 1.0 / config_.priors.beta_var;
  v.diagonal().tail(2).array() += 1.0 / config_.priors.xi_var;
  MvnConditional out;
  out.linear = std::move(b);
  out.precision = SpdMatrix(std::move(v));
  return out;
}

void GibbsSampler::step_mean(RngStream& rng) {
  const MvnConditional cond = mean_conditional();
  const Eigen::VectorXd draw =
      mvn_sample_precision(cond.precision, cond.linear, rng);
  state_.beta = draw.head(2);
  state_.xi = draw.tail(2);
}

void GibbsSampler::step_mean_collapsed(RngStream& rng) {
  ensure_sigma_y_cache();
  if (config_.spatial) ensure_spatial_cache();
  const auto f_n = static_cast<Eigen::Index>(field_.size());
  const bool grouped = config_.variant == Variant::B;
  const Eigen::Index dim = grouped ? 4 : w_design_.cols();
  Eigen::MatrixXd u(f_n, dim);  // [1, T, X] for A, [1, T, g1, g2] for B
  if (grouped) {
    u.leftCols(2) = subset_rows(w_design_, field_);
    u.rightCols(2) = subset_rows(state_.g, field_);
  } else {
    u = subset_rows(w_design_, field_);
  }

  // Projected data z_i = a' Sigma_Y^{-1} y_i carries all of Y's information
  // about H_i; integrating the field out leaves
  //   theta | Y ~ N with precision Lambda + c U'(I + c S)^{-1} U
  // and linear term U'(I + c S)^{-1} z, where S is the field covariance
  // and c = a' Sigma_Y^{-1} a.
  const Eigen::VectorXd s = sigma_y_inv_ * state_.a;
  const double c = state_.a.dot(s);
  Eigen::VectorXd z(f_n);
  for (Eigen::Index r = 0; r < f_n; ++r) z(r) = s.dot(ds_.Y.row(field_[r]));

  Eigen::MatrixXd cap;  // I + c S
  if (config_.spatial) {
    cap = c * state_.sigma2_H * r_field_.matrix();
  } else {
    cap = Eigen::MatrixXd::Zero(f_n, f_n);
    cap.diagonal().setConstant(c * state_.sigma2_H);
  }
  cap.diagonal().array() += 1.0;
  const SpdMatrix cap_spd(std::move(cap));

  Eigen::MatrixXd v = c * (u.transpose() * cap_spd.solve(u));
  if (grouped) {
    v.diagonal().head(2).array() += 1.0 / config_.priors.beta_var;
    v.diagonal().tail(2).array() += 1.0 / config_.priors.xi_var;
  } else {
    v.diagonal().array() += 1.0 / config_.priors.beta_var;
  }
  const Eigen::VectorXd b = u.transpose() * cap_spd.solve(z);
  const Eigen::VectorXd theta =
      mvn_sample_precision(SpdMatrix(std::move(v)), b, rng);
  if (grouped) {
    state_.beta = theta.head(2);
    state_.xi = theta.tail(2);
  } else {
    state_.beta = theta;
  }

  // Complete the joint block: field redraw given the new coefficients.
  const Eigen::VectorXd mu_f = u * theta;
  Eigen::MatrixXd lambda;
  Eigen::VectorXd lin(f_n);
  if (config_.spatial) {
    lambda = r_inv_ / state_.sigma2_H;
    lin = (r_inv_ * mu_f) / state_.sigma2_H;
  } else {
    lambda = Eigen::MatrixXd::Zero(f_n, f_n);
    lambda.diagonal().setConstant(1.0 / state_.sigma2_H);
    lin = mu_f / state_.sigma2_H;
  }
  lambda.diagonal().array() += c;
  lin += z;
  const Eigen::VectorXd h_f =
      mvn_sample_precision(SpdMatrix(std::move(lambda)), lin, rng);
  for (Eigen::Index r = 0; r < f_n; ++r) state_.H(field_[r]) = h_f(r);
}

double GibbsSampler::phi_marginal_log_target(double phi) const {
  // sigma2_H integrated out against its inverse-gamma prior:
  // -0.5 log|R| - (alpha + F/2) log(beta_H + q(phi)/2) + log p(phi),
  // with q the correlation-whitened residual sum of squares.
  const Eigen::VectorXd d = subset(state_.H, field_) - field_mean();
  const SpdMatrix r = build_correlation(d_field_, phi, config_.nugget);
  const double quad = r.inv_quad_form(d);
  const double shape =
      config_.priors.sigma_h_shape + 0.5 * static_cast<double>(field_.size());
  return -0.5 * r.log_det() -
         shape * std::log(config_.priors.sigma_h_scale + 0.5 * quad) +
         lognormal_logpdf(phi, config_.priors.phi_log_mu,
                          config_.priors.phi_log_sigma);
}

bool GibbsSampler::step_phi_sigma_collapsed(RngStream& phi_rng,
                                            RngStream& sigma_rng,
                                            double proposal_sd, double* alpha) {
  if (!config_.spatial) return false;
  const double theta = std::log(state_.phi);
  const double theta_prop = theta + proposal_sd * phi_rng.normal();
  const double phi_prop = std::exp(theta_prop);
  const double la = phi_marginal_log_target(phi_prop) + theta_prop -
                    phi_marginal_log_target(state_.phi) - theta;
  const double u = phi_rng.uniform();
  if (alpha) *alpha = std::exp(std::min(la, 0.0));
  const bool accepted = std::log(u) < la;
  if (accepted) {
    state_.phi = phi_prop;
    spatial_dirty_ = true;
  }
  // Restore joint consistency: sigma2 from its conditional at the new phi.
  ensure_spatial_cache();
  const Eigen::VectorXd d = subset(state_.H, field_) - field_mean();
  const double quad = r_field_.inv_quad_form(d);
  const double shape =
      config_.priors.sigma_h_shape + 0.5 * static_cast<double>(field_.size());
  state_.sigma2_H = inv_gamma_sample(
      shape, config_.priors.sigma_h_scale + 0.5 * quad, sigma_rng);
  return accepted;
}

bool GibbsSampler::step_scale(RngStream& rng, double proposal_sd) {
  const double eps = proposal_sd * rng.normal();
  const double l = std::exp(eps);
  const auto f_n = static_cast<double>(field_.size());
  const auto& pr = config_.priors;

  // The metric level and the whitened field quadratic form are invariant
  // along the orbit; only the log determinant, the anchor, and the scaled
  // priors move.
  double delta = f_n * eps;  // -0.5 * d(log det Sigma_H) = F log l
  if (anchor_ >= 0)
    delta += normal_logpdf(state_.H(anchor_) / l, pr.anchor_mean, pr.anchor_var) -
             normal_logpdf(state_.H(anchor_), pr.anchor_mean, pr.anchor_var);
  delta += -0.5 * (l * l - 1.0) * state_.a.squaredNorm() / pr.loading_var;
  delta +=
      -0.5 * (1.0 / (l * l) - 1.0) * state_.beta.squaredNorm() / pr.beta_var;
  if (config_.variant == Variant::B)
    delta += -0.5 * (1.0 / (l * l) - 1.0) * state_.xi.squaredNorm() / pr.xi_var;
  delta += inv_gamma_logpdf(state_.sigma2_H / (l * l), pr.sigma_h_shape,
                            pr.sigma_h_scale) -
           inv_gamma_logpdf(state_.sigma2_H, pr.sigma_h_shape, pr.sigma_h_scale);

  // Orbit Jacobian: a scales up (P), H (N), beta, xi down, sigma2 by l^-2.
  const double jac_pow = static_cast<double>(ds_.p()) -
                         static_cast<double>(ds_.n()) -
                         static_cast<double>(state_.beta.size()) -
                         static_cast<double>(state_.xi.size()) - 2.0;
  const double la = delta + jac_pow * eps;
  const double u = rng.uniform();
  if (std::log(u) >= la) return false;
  state_.a *= l;
  state_.H /= l;
  state_.beta /= l;
  if (config_.variant == Variant::B) state_.xi /= l;
  state_.sigma2_H /= l * l;
  return true;
}

double GibbsSampler::phi_log_target(double phi) const {
  const Eigen::VectorXd h_f = subset(state_.H, field_);
  const Eigen::VectorXd mu_f = field_mean();
  double ll;
  if (opts_.mutation == Mutation::kPhiTargetsProductDensity) {
    // Product of the single-site full conditionals in place of the joint
    // field density (a pseudo-likelihood, not a distribution over H).
    const SpdMatrix r = build_correlation(d_field_, phi, config_.nugget);
    const Eigen::MatrixXd q =
        r.solve(Eigen::MatrixXd::Identity(h_f.size(), h_f.size()).eval()) /
        state_.sigma2_H;
    ll = 0.0;
    for (Eigen::Index i = 0; i < h_f.size(); ++i) {
      const double var_i = 1.0 / q(i, i);
      const double t = q.row(i).dot(h_f - mu_f);
      const double m_i = mu_f(i) - var_i * (t - q(i, i) * (h_f(i) - mu_f(i)));
      ll += normal_logpdf(h_f(i), m_i, var_i);
    }
  } else {
    const SpdMatrix sigma_h =
        build_sigma_h(d_field_, state_.sigma2_H, phi, config_.nugget);
    ll = mvn_logpdf(h_f, mu_f, sigma_h);
  }
  return ll + lognormal_logpdf(phi, config_.priors.phi_log_mu,
                               config_.priors.phi_log_sigma);
}

bool GibbsSampler::step_phi(RngStream& rng, double proposal_sd, double* alpha) {
  if (!config_.spatial) return false;
  const double theta = std::log(state_.phi);
  const double theta_prop = theta + proposal_sd * rng.normal();
  const double phi_prop = std::exp(theta_prop);
  // Log-scale walk: the theta terms are the transform Jacobian.
  const double la = phi_log_target(phi_prop) + theta_prop -
                    phi_log_target(state_.phi) - theta;
  const double u = rng.uniform();
  if (alpha) *alpha = std::min(1.0, std::exp(std::min(la, 0.0)) * 1.0);
  if (std::log(u) < la) {
    state_.phi = phi_prop;
    spatial_dirty_ = true;
    return true;
  }
  return false;
}

void GibbsSampler::step_xi(RngStream& rng) {
  if (config_.spatial) ensure_spatial_cache();
  const Eigen::MatrixXd gf = subset_rows(state_.g, field_);
  const Eigen::MatrixXd wf = subset_rows(w_design_, field_);
  const Eigen::VectorXd d = subset(state_.H, field_) - wf * state_.beta;
  Eigen::MatrixXd v;
  Eigen::VectorXd b;
  if (config_.spatial) {
    const Eigen::MatrixXd m = r_field_.solve(gf);
    v = gf.transpose() * m / state_.sigma2_H;
    b = m.transpose() * d / state_.sigma2_H;
  } else {
    v = gf.transpose() * gf / state_.sigma2_H;
    b = gf.transpose() * d / state_.sigma2_H;
  }
  v.diagonal().array() += 1.0 / config_.priors.xi_var;
  state_.xi = mvn_sample_precision(SpdMatrix(std::move(v)), b, rng);
}

double GibbsSampler::gamma_log_target(const Eigen::VectorXd& gamma) const {
  const Eigen::VectorXd eta = ds_.X * gamma;
  double ll = 0.0;
  for (int i = 0; i < ds_.n(); ++i) {
    const double softplus =
        std::max(eta(i), 0.0) + std::log1p(std::exp(-std::abs(eta(i))));
    ll += ds_.T(i) * eta(i) - softplus;
  }
  for (Eigen::Index j = 0; j < gamma.size(); ++j)
    ll += normal_logpdf(gamma(j), 0.0, config_.priors.gamma_var);
  return ll;
}

bool GibbsSampler::step_gamma(RngStream& rng, double proposal_sd,
                              double* alpha) {
  Eigen::VectorXd prop = state_.gamma;
  for (Eigen::Index j = 0; j < prop.size(); ++j)
    prop(j) += proposal_sd * rng.normal();
  const double la = gamma_log_target(prop) - gamma_log_target(state_.gamma);
  const double u = rng.uniform();
  if (alpha) *alpha = std::exp(std::min(la, 0.0));
  if (std::log(u) < la) {
    state_.gamma = prop;
    refresh_propensity(state_, ds_);
    return true;
  }
  return false;
}

GibbsSampler::SweepResult GibbsSampler::sweep(ChainStreams& streams,
                                              double phi_proposal_sd,
                                              double gamma_proposal_sd) {
  SweepResult res;
  const bool grouped_mean =
      opts_.block_mean_update && config_.variant == Variant::B &&
      opts_.mask.beta && opts_.mask.xi;
  if (opts_.mask.h || opts_.mask.anchor_h) step_h(streams.h);
  if (opts_.mask.a) step_a(streams.a);
  if (opts_.mask.sigma_y) step_sigma_y(streams.sigma_y);
  if (opts_.mask.sigma2_h) step_sigma2_h(streams.sigma2_h);
  if (grouped_mean)
    step_mean(streams.beta);
  else if (opts_.mask.beta)
    step_beta(streams.beta);
  const bool collapse =
      opts_.collapse && opts_.mask.beta && opts_.mask.h &&
      (config_.variant == Variant::A || opts_.mask.xi);
  const bool collapse_range =
      opts_.collapse && config_.spatial && opts_.mask.phi &&
      opts_.mask.sigma2_h;
  if (collapse && config_.variant == Variant::A)
    step_mean_collapsed(streams.beta);
  if (config_.spatial && opts_.mask.phi) {
    res.phi_proposed = true;
    res.phi_accepted =
        collapse_range
            ? step_phi_sigma_collapsed(streams.phi, streams.sigma2_h,
                                       phi_proposal_sd, &res.phi_alpha)
            : step_phi(streams.phi, phi_proposal_sd, &res.phi_alpha);
  }
  if (config_.variant == Variant::B) {
    if (opts_.mask.xi && !grouped_mean) step_xi(streams.xi);
    if (collapse) step_mean_collapsed(streams.beta);
    if (opts_.mask.gamma) {
      res.gamma_proposed = true;
      res.gamma_accepted =
          step_gamma(streams.gamma, gamma_proposal_sd, &res.gamma_alpha);
    }
  }
  if (opts_.collapse && opts_.mask.h && opts_.mask.anchor_h && opts_.mask.a &&
      opts_.mask.beta && opts_.mask.sigma2_h &&
      (config_.variant == Variant::A || opts_.mask.xi))
    step_scale(streams.scale);
  return res;
}

HSiteConditional GibbsSampler::h_site_conditional(int country) const {
  ensure_sigma_y_cache();
  const Eigen::VectorXd s = sigma_y_inv_ * state_.a;
  const double like_prec = state_.a.dot(s);
  HSiteConditional out;
  if (country == anchor_) {
    const double prec = like_prec + 1.0 / config_.priors.anchor_var;
    const double lin = s.dot(ds_.Y.row(country)) +
                       config_.priors.anchor_mean / config_.priors.anchor_var;
    out.mean = lin / prec;
    out.var = 1.0 / prec;
    return out;
  }
  int r = -1;
  for (size_t k = 0; k < field_.size(); ++k)
    if (field_[k] == country) r = static_cast<int>(k);
  if (r < 0) throw Error("h_site_conditional: country not in field");
  const Eigen::VectorXd h_f = subset(state_.H, field_);
  const Eigen::VectorXd mu_f = field_mean();
  double q_rr, cond_lin;
  if (config_.spatial) {
    ensure_spatial_cache();
    q_rr = r_inv_(r, r) / state_.sigma2_H;
    const double t = r_inv_.row(r).dot(h_f - mu_f) / state_.sigma2_H;
    cond_lin = q_rr * mu_f(r) - (t - q_rr * (h_f(r) - mu_f(r)));
  } else {
    q_rr = 1.0 / state_.sigma2_H;
    cond_lin = mu_f(r) / state_.sigma2_H;
  }
  const double prec = like_prec + q_rr;
  out.mean = (s.dot(ds_.Y.row(country)) + cond_lin) / prec;
  out.var = 1.0 / prec;
  return out;
}

MvnConditional GibbsSampler::a_conditional() const {
  ensure_sigma_y_cache();
  Eigen::MatrixXd v = state_.H.squaredNorm() * sigma_y_inv_;
  v.diagonal().array() += 1.0 / config_.priors.loading_var;
  MvnConditional out;
  out.linear = sigma_y_inv_ * (ds_.Y.transpose() * state_.H);
  out.precision = SpdMatrix(std::move(v));
  return out;
}

InvWishartConditional GibbsSampler::sigma_y_conditional() const {
  const Eigen::MatrixXd resid = ds_.Y - state_.H * state_.a.transpose();
  InvWishartConditional out;
  out.dof = config_.priors.resolved_sigma_y_dof(ds_.p()) + ds_.n();
  out.scale = resid.transpose() * resid;
  out.scale.diagonal().array() += 1.0;  // identity prior scale
  return out;
}

InvGammaConditional GibbsSampler::sigma2_h_conditional() const {
  const Eigen::VectorXd d = subset(state_.H, field_) - field_mean();
  double quad;
  if (config_.spatial) {
    ensure_spatial_cache();
    quad = r_field_.inv_quad_form(d);
  } else {
    quad = d.squaredNorm();
  }
  InvGammaConditional out;
  out.shape = 0.5 * static_cast<double>(field_.size()) + config_.priors.sigma_h_shape;
  out.rate = 0.5 * quad + config_.priors.sigma_h_scale;
  return out;
}

MvnConditional GibbsSampler::beta_conditional() const {
  if (config_.spatial) ensure_spatial_cache();
  const Eigen::MatrixXd wf = subset_rows(w_design_, field_);
  Eigen::VectorXd d = subset(state_.H, field_);
  if (config_.variant == Variant::B)
    d -= subset_rows(state_.g, field_) * state_.xi;
  Eigen::MatrixXd v;
  Eigen::VectorXd b;
  if (config_.spatial) {
    const Eigen::MatrixXd m = r_field_.solve(wf);
    v = wf.transpose() * m / state_.sigma2_H;
    b = m.transpose() * d / state_.sigma2_H;
  } else {
    v = wf.transpose() * wf / state_.sigma2_H;
    b = wf.transpose() * d / state_.sigma2_H;
  }
  v.diagonal().array() += 1.0 / config_.priors.beta_var;
  MvnConditional out;
  out.linear = std::move(b);
  out.precision = SpdMatrix(std::move(v));
  return out;
}

MvnConditional GibbsSampler::xi_conditional() const {
  if (config_.spatial) ensure_spatial_cache();
  const Eigen::MatrixXd gf = subset_rows(state_.g, field_);
  const Eigen::MatrixXd wf = subset_rows(w_design_, field_);
  const Eigen::VectorXd d = subset(state_.H, field_) - wf * state_.beta;
  Eigen::MatrixXd v;
  Eigen::VectorXd b;
  if (config_.spatial) {
    const Eigen::MatrixXd m = r_field_.solve(gf);
    v = gf.transpose() * m / state_.sigma2_H;
    b = m.transpose() * d / state_.sigma2_H;
  } else {
    v = gf.transpose() * gf / state_.sigma2_H;
    b = gf.transpose() * d / state_.sigma2_H;
  }
  v.diagonal().array() += 1.0 / config_.priors.xi_var;
  MvnConditional out;
  out.linear = std::move(b);
  out.precision = SpdMatrix(std::move(v));
  return out;
}

// --- sample containers ---

std::vector<std::pair<std::string, std::vector<std::string>>> sample_schema(
    const Dataset& ds, const ModelConfig& config) {
  std::vector<std::pair<std::string, std::vector<std::string>>> schema;
  {
    std::vector<std::string> cols;
    for (const auto& c : ds.countries) cols.push_back("H[" + c.id + "]");
    schema.emplace_back("H", cols);
  }
  {
    std::vector<std::string> cols;
    for (int j = 1; j <= ds.p(); ++j) cols.push_back("a[" + std::to_string(j) + "]");
    schema.emplace_back("a", cols);
  }
  {
    std::vector<std::string> cols;
    for (int i = 1; i <= ds.p(); ++i)
      for (int j = 1; j <= i; ++j)
        cols.push_back("Sigma_Y[" + std::to_string(i) + "," + std::to_string(j) + "]");
    schema.emplace_back("Sigma_Y", cols);
  }
  {
    const int nb = config.variant == Variant::A ? 2 + ds.k() : 2;
    std::vector<std::string> cols;
    for (int j = 0; j < nb; ++j) cols.push_back("beta[" + std::to_string(j) + "]");
    schema.emplace_back("beta", cols);
  }
  schema.emplace_back("sigma2_H", std::vector<std::string>{"sigma2_H"});
  if (config.spatial)
    schema.emplace_back("phi", std::vector<std::string>{"phi"});
  if (config.variant == Variant::B) {
    schema.emplace_back("xi", std::vector<std::string>{"xi[1]", "xi[2]"});
    std::vector<std::string> cols;
    for (int j = 1; j <= ds.k(); ++j) cols.push_back("gamma[" + std::to_string(j) + "]");
    schema.emplace_back("gamma", cols);
  }
  return schema;
}

long PosteriorSamples::draws_per_chain() const {
  return chains.empty() ? 0 : chains.front().kept;
}

long PosteriorSamples::total_draws() const {
  long n = 0;
  for (const auto& c : chains) n += c.kept;
  return n;
}

bool PosteriorSamples::has_block(const std::string& block) const {
  return columns.count(block) > 0;
}

Eigen::MatrixXd PosteriorSamples::pooled_block(const std::string& block) const {
  auto it = columns.find(block);
  if (it == columns.end()) throw Error("no such sample block: " + block);
  const auto dim = static_cast<Eigen::Index>(it->second.size());
  Eigen::MatrixXd out(total_draws(), dim);
  Eigen::Index row = 0;
  for (const auto& c : chains) {
    const auto& m = c.blocks.at(block);
    out.middleRows(row, c.kept) = m.topRows(c.kept);
    row += c.kept;
  }
  return out;
}

Eigen::VectorXd PosteriorSamples::pooled_column(const std::string& name) const {
  for (const auto& block : block_names) {
    const auto& cols = columns.at(block);
    for (size_t j = 0; j < cols.size(); ++j) {
      if (cols[j] == name) {
        Eigen::VectorXd out(total_draws());
        Eigen::Index row = 0;
        for (const auto& c : chains) {
          out.segment(row, c.kept) =
              c.blocks.at(block).col(static_cast<Eigen::Index>(j)).head(c.kept);
          row += c.kept;
        }
        return out;
      }
    }
  }
  throw Error("no such sample column: " + name);
}

Eigen::VectorXd PosteriorSamples::chain_column(int chain,
                                               const std::string& name) const {
  if (chain < 0 || chain >= static_cast<int>(chains.size()))
    throw Error("chain index out of range");
  for (const auto& block : block_names) {
    const auto& cols = columns.at(block);
    for (size_t j = 0; j < cols.size(); ++j) {
      if (cols[j] == name) {
        const auto& c = chains[chain];
        return c.blocks.at(block).col(static_cast<Eigen::Index>(j)).head(c.kept);
      }
    }
  }
  throw Error("no such sample column: " + name);
}

std::vector<std::string> PosteriorSamples::scalar_names() const {
  std::vector<std::string> out;
  for (const auto& block : block_names)
    for (const auto& c : columns.at(block)) out.push_back(c);
  return out;
}

// --- chain runner ---

ChainRunner::ChainRunner(const Dataset& ds, const ModelConfig& model,
                         const McmcConfig& mcmc, int chain_id,
                         SamplerOptions opts)
    : ds_(ds),
      model_(model),
      mcmc_(mcmc),
      opts_(opts),
      sampler_(ds, model, [&] {
        SamplerOptions o = opts;
        o.block_h_update = o.block_h_update || mcmc.block_h;
        o.block_mean_update = o.block_mean_update || mcmc.block_mean;
        o.collapse = o.collapse || mcmc.collapse;
        return o;
      }()),
      streams_(ChainStreams::make(mcmc.seed, chain_id)) {
  mcmc_.validate();
  samples_.chain_id = chain_id;
  log_phi_sd_ = std::log(mcmc_.phi_proposal_sd);
  log_gamma_sd_ = std::log(mcmc_.gamma_proposal_sd);
  kept_capacity_ = (mcmc_.iterations - mcmc_.burn_in) / mcmc_.thin;
  for (const auto& [block, cols] : sample_schema(ds_, model_)) {
    samples_.blocks[block] = Eigen::MatrixXd::Zero(
        kept_capacity_, static_cast<Eigen::Index>(cols.size()));
  }
  sampler_.init_state(streams_.init);
}

void ChainRunner::set_checkpoint_path(const std::string& path, long every) {
  checkpoint_path_ = path;
  checkpoint_every_ = every;
}

bool ChainRunner::finished() const { return iteration_ >= mcmc_.iterations; }

void ChainRunner::record_draw() {
  const ChainState& s = sampler_.state();
  const long r = samples_.kept;
  auto& blocks = samples_.blocks;
  blocks["H"].row(r) = s.H.transpose();
  blocks["a"].row(r) = s.a.transpose();
  {
    auto& m = blocks["Sigma_Y"];
    Eigen::Index c = 0;
    for (int i = 0; i < ds_.p(); ++i)
      for (int j = 0; j <= i; ++j) m(r, c++) = s.Sigma_Y.matrix()(i, j);
  }
  blocks["beta"].row(r) = s.beta.transpose();
  blocks["sigma2_H"](r, 0) = s.sigma2_H;
  if (model_.spatial) blocks["phi"](r, 0) = s.phi;
  if (model_.variant == Variant::B) {
    blocks["xi"].row(r) = s.xi.transpose();
    blocks["gamma"].row(r) = s.gamma.transpose();
  }
  ++samples_.kept;
}

void ChainRunner::check_health() {
  if (!sampler_.state().finite())
    throw Error("chain " + std::to_string(samples_.chain_id) +
                ": non-finite parameter state at iteration " +
                std::to_string(iteration_));
  const double lj = log_joint(sampler_.state(), ds_, model_).total();
  if (!std::isfinite(lj)) {
    std::string dump = "(no dump path)";
    if (!checkpoint_path_.empty()) {
      dump = checkpoint_path_ + ".statedump.json";
      json j;
      const ChainState& s = sampler_.state();
      j["iteration"] = iteration_;
      j["H"] = std::vector<double>(s.H.data(), s.H.data() + s.H.size());
      j["a"] = std::vector<double>(s.a.data(), s.a.data() + s.a.size());
      j["beta"] = std::vector<double>(s.beta.data(), s.beta.data() + s.beta.size());
      j["sigma2_H"] = s.sigma2_H;
      j["phi"] = s.phi;
      std::ofstream out(dump);
      out << j.dump(2) << "\n";
    }
    throw Error("non-finite log joint at iteration " +
                std::to_string(iteration_) + "; state dump: " + dump);
  }
}

void ChainRunner::run(std::optional<long> stop_after) {
  const long target = std::min(stop_after.value_or(mcmc_.iterations),
                               mcmc_.iterations);
  while (iteration_ < target) {
    ++iteration_;
    const bool in_burn = iteration_ <= mcmc_.burn_in;
    auto res = sampler_.sweep(streams_, std::exp(log_phi_sd_),
                              std::exp(log_gamma_sd_));
    if (in_burn && mcmc_.adapt) {
      // Robbins-Monro on the log proposal scales, frozen after burn-in.
      const double step = 1.0 / std::pow(static_cast<double>(iteration_), 0.6);
      if (res.phi_proposed)
        log_phi_sd_ = std::clamp(log_phi_sd_ + step * (res.phi_alpha - 0.44),
                                 std::log(1e-4), std::log(50.0));
      if (res.gamma_proposed)
        log_gamma_sd_ =
            std::clamp(log_gamma_sd_ + step * (res.gamma_alpha - 0.234),
                       std::log(1e-4), std::log(50.0));
    }
    if (!in_burn) {
      if (res.phi_proposed) {
        ++phi_proposals_;
        if (res.phi_accepted) ++phi_accepts_;
      }
      if (res.gamma_proposed) {
        ++gamma_proposals_;
        if (res.gamma_accepted) ++gamma_accepts_;
      }
      if ((iteration_ - mcmc_.burn_in) % mcmc_.thin == 0) record_draw();
    }
    if (!sampler_.state().finite())
      check_health();  // throws with a dump
    else if (iteration_ % 500 == 0 || iteration_ == mcmc_.iterations)
      check_health();
    if (checkpoint_every_ > 0 && !checkpoint_path_.empty() &&
        iteration_ % checkpoint_every_ == 0 && iteration_ < mcmc_.iterations)
      write_checkpoint();
  }
  if (finished()) {
    samples_.phi_accept_rate =
        phi_proposals_ ? static_cast<double>(phi_accepts_) / phi_proposals_ : 0.0;
    samples_.gamma_accept_rate =
        gamma_proposals_ ? static_cast<double>(gamma_accepts_) / gamma_proposals_
                         : 0.0;
    samples_.phi_proposal_sd = std::exp(log_phi_sd_);
    samples_.gamma_proposal_sd = std::exp(log_gamma_sd_);
  }
}

namespace {

constexpr char kCheckpointMagic[5] = {'L', 'H', 'F', 'I', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_i64(std::ostream& out, std::int64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_vec(std::ostream& out, const Eigen::VectorXd& v) {
  put_i64(out, v.size());
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(sizeof(double) * v.size()));
}
void put_mat(std::ostream& out, const Eigen::MatrixXd& m) {
  put_i64(out, m.rows());
  put_i64(out, m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) put_f64(out, m(i, j));
}
void put_stream(std::ostream& out, const RngStream& s) {
  for (auto w : s.state()) put_u64(out, w);
}

std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
std::int64_t get_i64(std::istream& in) {
  std::int64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
double get_f64(std::istream& in) {
  double v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
Eigen::VectorXd get_vec(std::istream& in) {
  const auto n = get_i64(in);
  Eigen::VectorXd v(n);
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(sizeof(double) * n));
  return v;
}
Eigen::MatrixXd get_mat(std::istream& in) {
  const auto r = get_i64(in);
  const auto c = get_i64(in);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = get_f64(in);
  return m;
}
void get_stream(std::istream& in, RngStream& s) {
  std::array<std::uint64_t, 4> w{};
  for (auto& x : w) x = get_u64(in);
  s.restore(w);
}

}  // namespace

void ChainRunner::write_checkpoint() const {
  const std::string tmp = checkpoint_path_ + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write checkpoint: " + tmp);
    out.write(kCheckpointMagic, sizeof kCheckpointMagic);
    put_u64(out, 1);  // version
    const std::uint64_t fp =
        fnv1a64(model_.to_json() + mcmc_.to_json() +
                std::to_string(ds_.hash()) + std::to_string(samples_.chain_id) +
                mutation_name(opts_.mutation));
    put_u64(out, fp);
    put_i64(out, iteration_);
    put_f64(out, log_phi_sd_);
    put_f64(out, log_gamma_sd_);
    put_i64(out, phi_accepts_);
    put_i64(out, phi_proposals_);
    put_i64(out, gamma_accepts_);
    put_i64(out, gamma_proposals_);

    const ChainState& s = sampler_.state();
    put_vec(out, s.H);
    put_vec(out, s.a);
    put_mat(out, s.Sigma_Y.matrix());
    put_vec(out, s.beta);
    put_f64(out, s.sigma2_H);
    put_f64(out, s.phi);
    put_vec(out, s.gamma);
    put_vec(out, s.xi);

    for (const RngStream* st :
         {&streams_.init, &streams_.h, &streams_.a, &streams_.sigma_y,
          &streams_.sigma2_h, &streams_.beta, &streams_.phi, &streams_.xi,
          &streams_.gamma, &streams_.data, &streams_.scale})
      put_stream(out, *st);

    put_i64(out, samples_.kept);
    put_i64(out, static_cast<std::int64_t>(samples_.blocks.size()));
    for (const auto& [name, m] : samples_.blocks) {
      put_i64(out, static_cast<std::int64_t>(name.size()));
      out.write(name.data(), static_cast<std::streamsize>(name.size()));
      put_mat(out, m.topRows(samples_.kept));
    }
  }
  std::filesystem::rename(tmp, checkpoint_path_);
}

bool ChainRunner::resume_from(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  char magic[5];
  in.read(magic, sizeof magic);
  if (std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0)
    throw Error("not a checkpoint file: " + path);
  if (get_u64(in) != 1) throw Error("unsupported checkpoint version");
  const std::uint64_t fp =
      fnv1a64(model_.to_json() + mcmc_.to_json() + std::to_string(ds_.hash()) +
              std::to_string(samples_.chain_id) + mutation_name(opts_.mutation));
  if (get_u64(in) != fp)
    throw Error("checkpoint does not match this run configuration");
  iteration_ = get_i64(in);
  log_phi_sd_ = get_f64(in);
  log_gamma_sd_ = get_f64(in);
  phi_accepts_ = get_i64(in);
  phi_proposals_ = get_i64(in);
  gamma_accepts_ = get_i64(in);
  gamma_proposals_ = get_i64(in);

  ChainState s;
  s.H = get_vec(in);
  s.a = get_vec(in);
  s.Sigma_Y = SpdMatrix(get_mat(in));
  s.beta = get_vec(in);
  s.sigma2_H = get_f64(in);
  s.phi = get_f64(in);
  s.gamma = get_vec(in);
  s.xi = get_vec(in);
  sampler_.set_state(std::move(s));

  for (RngStream* st :
       {&streams_.init, &streams_.h, &streams_.a, &streams_.sigma_y,
        &streams_.sigma2_h, &streams_.beta, &streams_.phi, &streams_.xi,
        &streams_.gamma, &streams_.data, &streams_.scale})
    get_stream(in, *st);

  samples_.kept = get_i64(in);
  const auto n_blocks = get_i64(in);
  for (std::int64_t b = 0; b < n_blocks; ++b) {
    const auto len = get_i64(in);
    std::string name(static_cast<size_t>(len), '\0');
    in.read(name.data(), len);
    const Eigen::MatrixXd stored = get_mat(in);
    auto it = samples_.blocks.find(name);
    if (it == samples_.blocks.end())
      throw Error("checkpoint block not in schema: " + name);
    it->second.topRows(samples_.kept) = stored;
  }
  if (!in) throw Error("truncated checkpoint: " + path);
  return true;
}

PosteriorSamples run_chains(const Dataset& ds, const ModelConfig& model,
                            const McmcConfig& mcmc, SamplerOptions opts) {
  PosteriorSamples out;
  out.variant = model.variant;
  out.spatial = model.spatial;
  out.anchored = model.anchored;
  for (const auto& [block, cols] : sample_schema(ds, model)) {
    out.block_names.push_back(block);
    out.columns[block] = cols;
  }
  for (int c = 0; c < mcmc.chains; ++c) {
    ChainRunner runner(ds, model, mcmc, c, opts);
    runner.run();
    out.chains.push_back(runner.samples());
  }
  return out;
}

}  // namespace lhfi
