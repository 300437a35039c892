#include "lhfi/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace lhfi {

using nlohmann::json;

std::string variant_name(Variant v) { return v == Variant::A ? "A" : "B"; }

Variant variant_from_name(const std::string& s) {
  if (s == "A" || s == "a") return Variant::A;
  if (s == "B" || s == "b") return Variant::B;
  throw Error("unknown model variant: " + s);
}

void PriorConfig::validate(int p) const {
  if (loading_var <= 0 || beta_var <= 0 || xi_var <= 0 || gamma_var <= 0 ||
      sigma_h_shape <= 0 || sigma_h_scale <= 0 || phi_log_sigma <= 0 ||
      anchor_var <= 0)
    throw Error("priors: variances, shapes and scales must be positive");
  if (resolved_sigma_y_dof(p) <= p - 1)
    throw Error("priors: sigma_y_dof must exceed P - 1");
}

double ModelConfig::distance_factor() const {
  if (distance_unit == "Mm") return 1.0;
  if (distance_unit == "km") return 1000.0;
  throw Error("unknown distance unit: " + distance_unit);
}

int ModelConfig::resolved_anchor(const Dataset& ds) const {
  if (anchor_id.empty()) return ds.anchor_index;
  const int idx = ds.country_index(anchor_id);
  if (idx < 0) throw Error("anchor country not in dataset: " + anchor_id);
  return idx;
}

std::string ModelConfig::to_json() const {
  json j;
  j["variant"] = variant_name(variant);
  j["spatial"] = spatial;
  j["anchored"] = anchored;
  if (!anchor_id.empty()) j["anchor_id"] = anchor_id;
  j["nugget"] = nugget;
  j["distance_unit"] = distance_unit;
  j["priors"] = {{"loading_var", priors.loading_var},
                 {"beta_var", priors.beta_var},
                 {"xi_var", priors.xi_var},
                 {"gamma_var", priors.gamma_var},
                 {"sigma_y_dof", priors.sigma_y_dof},
                 {"sigma_h_shape", priors.sigma_h_shape},
                 {"sigma_h_scale", priors.sigma_h_scale},
                 {"phi_log_mu", priors.phi_log_mu},
                 {"phi_log_sigma", priors.phi_log_sigma},
                 {"anchor_mean", priors.anchor_mean},
                 {"anchor_var", priors.anchor_var}};
  return j.dump(2);
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw Error("invalid JSON in model config");
  ModelConfig c;
  if (j.contains("variant")) c.variant = variant_from_name(j["variant"].get<std::string>());
  if (j.contains("spatial")) c.spatial = j["spatial"].get<bool>();
  if (j.contains("anchored")) c.anchored = j["anchored"].get<bool>();
  if (j.contains("anchor_id")) c.anchor_id = j["anchor_id"].get<std::string>();
  if (j.contains("nugget")) c.nugget = j["nugget"].get<double>();
  if (j.contains("distance_unit")) c.distance_unit = j["distance_unit"].get<std::string>();
  if (j.contains("priors")) {
    const json& p = j["priors"];
    auto get = [&p](const char* key, double& field) {
      if (p.contains(key)) field = p[key].get<double>();
    };
    get("loading_var", c.priors.loading_var);
    get("beta_var", c.priors.beta_var);
    get("xi_var", c.priors.xi_var);
    get("gamma_var", c.priors.gamma_var);
    get("sigma_y_dof", c.priors.sigma_y_dof);
    get("sigma_h_shape", c.priors.sigma_h_shape);
    get("sigma_h_scale", c.priors.sigma_h_scale);
    get("phi_log_mu", c.priors.phi_log_mu);
    get("phi_log_sigma", c.priors.phi_log_sigma);
    get("anchor_mean", c.priors.anchor_mean);
    get("anchor_var", c.priors.anchor_var);
  }
  (void)c.distance_factor();
  return c;
}

ModelConfig ModelConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

bool ChainState::finite() const {
  auto ok = [](const Eigen::VectorXd& v) { return v.allFinite(); };
  return ok(H) && ok(a) && Sigma_Y.matrix().allFinite() && ok(beta) &&
         std::isfinite(sigma2_H) && sigma2_H > 0 && std::isfinite(phi) &&
         phi > 0 && (gamma.size() == 0 || gamma.allFinite()) &&
         (xi.size() == 0 || xi.allFinite());
}

double spatial_correlation(double d, double phi) {
  if (d < 0 || !(phi > 0)) throw Error("spatial_correlation: need d >= 0, phi > 0");
  return std::exp(-d / phi);
}

SpdMatrix build_correlation(const Eigen::MatrixXd& d_sub, double phi,
                            double nugget) {
  if (!(phi > 0) || nugget < 0)
    throw Error("build_correlation: need phi > 0, nugget >= 0");
  Eigen::MatrixXd r = (-d_sub / phi).array().exp();
  r.diagonal().array() += nugget;
  return SpdMatrix(std::move(r));
}

SpdMatrix build_sigma_h(const Eigen::MatrixXd& d_sub, double sigma2_h,
                        double phi, double nugget) {
  if (!(sigma2_h > 0)) throw Error("build_sigma_h: sigma2_h must be positive");
  Eigen::MatrixXd r = (-d_sub / phi).array().exp();
  r.diagonal().array() += nugget;
  return SpdMatrix(sigma2_h * r);
}

Eigen::VectorXd propensity_scores(const Eigen::MatrixXd& x,
                                  const Eigen::VectorXd& gamma) {
  if (x.cols() != gamma.size()) throw Error("propensity_scores: dimension mismatch");
  Eigen::VectorXd eta = x * gamma;
  Eigen::VectorXd z(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i)
    z(i) = std::clamp(1.0 / (1.0 + std::exp(-eta(i))), 1e-12, 1.0 - 1e-12);
  return z;
}

std::pair<double, double> tertile_knots(const Eigen::VectorXd& z) {
  const int n = static_cast<int>(z.size());
  if (n < 3) throw Error("tertile_knots: need at least 3 scores");
  std::vector<double> s(z.data(), z.data() + n);
  std::sort(s.begin(), s.end());
  const double q1 = s[n / 3];          // rank floor(N/3)+1, 1-based
  const double q2 = s[(2 * n) / 3];    // rank floor(2N/3)+1
  return {q1, q2};
}

Eigen::Vector2d subclass_indicator(double z_i, double q1, double q2) {
  if (z_i < q1) return {0.0, 0.0};
  if (z_i < q2) return {1.0, 0.0};
  return {0.0, 1.0};
}

Eigen::MatrixXd subclass_matrix(const Eigen::VectorXd& z, double q1,
                                double q2) {
  Eigen::MatrixXd g(z.size(), 2);
  for (Eigen::Index i = 0; i < z.size(); ++i)
    g.row(i) = subclass_indicator(z(i), q1, q2).transpose();
  return g;
}

void refresh_propensity(ChainState& state, const Dataset& ds) {
  state.z = propensity_scores(ds.X, state.gamma);
  std::tie(state.q1, state.q2) = tertile_knots(state.z);
  state.g = subclass_matrix(state.z, state.q1, state.q2);
}

std::array<int, 3> subclass_sizes(const Eigen::MatrixXd& g) {
  std::array<int, 3> sizes{0, 0, 0};
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    if (g(i, 0) > 0.5)
      ++sizes[1];
    else if (g(i, 1) > 0.5)
      ++sizes[2];
    else
      ++sizes[0];
  }
  return sizes;
}

Eigen::MatrixXd design_matrix(const Dataset& ds, Variant variant) {
  const int n = ds.n();
  if (variant == Variant::A) {
    Eigen::MatrixXd w(n, 2 + ds.k());
    w.col(0).setOnes();
    w.col(1) = ds.T;
    w.rightCols(ds.k()) = ds.X;
    return w;
  }
  Eigen::MatrixXd w(n, 2);
  w.col(0).setOnes();
  w.col(1) = ds.T;
  return w;
}

Eigen::VectorXd h_level_mean(const ChainState& state, const Dataset& ds,
                             Variant variant) {
  const Eigen::MatrixXd w = design_matrix(ds, variant);
  if (state.beta.size() != w.cols()) throw Error("h_level_mean: beta length mismatch");
  Eigen::VectorXd mu = w * state.beta;
  if (variant == Variant::B) {
    if (state.g.rows() != ds.n()) throw Error("h_level_mean: stale subclass matrix");
    mu += state.g * state.xi;
  }
  return mu;
}

std::vector<int> field_indices(const Dataset& ds, const ModelConfig& config) {
  std::vector<int> idx;
  const int anchor = config.anchored ? config.resolved_anchor(ds) : -1;
  for (int i = 0; i < ds.n(); ++i)
    if (i != anchor) idx.push_back(i);
  return idx;
}

Eigen::VectorXd subset(const Eigen::VectorXd& v, const std::vector<int>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(idx[i]);
  return out;
}

Eigen::MatrixXd subset_rows(const Eigen::MatrixXd& m,
                            const std::vector<int>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
  return out;
}

Eigen::MatrixXd subset_square(const Eigen::MatrixXd& m,
                              const std::vector<int>& idx) {
  const auto n = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) out(i, j) = m(idx[i], idx[j]);
  return out;
}

namespace {

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

}  // namespace

LogJointBreakdown log_joint(const ChainState& state, const Dataset& ds,
                            const ModelConfig& config) {
  const int n = ds.n();
  const int p = ds.p();
  config.priors.validate(p);
  LogJointBreakdown out;

  // Y-level: sum_i log MVN(y_i; a H_i, Sigma_Y), all residual solves batched
  // through one triangular solve.
  {
    Eigen::MatrixXd resid = ds.Y - state.H * state.a.transpose();  // N x P
    Eigen::MatrixXd t = state.Sigma_Y.chol_lower()
                            .triangularView<Eigen::Lower>()
                            .solve(resid.transpose().eval());
    const double quad = t.squaredNorm();
    out.y_level = -0.5 * (n * (p * 1.8378770664093454836 + state.Sigma_Y.log_det()) + quad);
  }

  const std::vector<int> idx = field_indices(ds, config);
  const Eigen::VectorXd mu = h_level_mean(state, ds, config.variant);
  const Eigen::VectorXd h_sub = subset(state.H, idx);
  const Eigen::VectorXd mu_sub = subset(mu, idx);

  if (config.spatial) {
    const Eigen::MatrixXd d_sub =
        subset_square(ds.D, idx) * config.distance_factor();
    const SpdMatrix sigma_h =
        build_sigma_h(d_sub, state.sigma2_H, state.phi, config.nugget);
    out.h_level = mvn_logpdf(h_sub, mu_sub, sigma_h);
    out.prior_phi = lognormal_logpdf(state.phi, config.priors.phi_log_mu,
                                     config.priors.phi_log_sigma);
  } else {
    for (Eigen::Index i = 0; i < h_sub.size(); ++i)
      out.h_level += normal_logpdf(h_sub(i), mu_sub(i), state.sigma2_H);
  }

  if (config.anchored) {
    const int anchor = config.resolved_anchor(ds);
    out.anchor = normal_logpdf(state.H(anchor), config.priors.anchor_mean,
                               config.priors.anchor_var);
  }

  if (config.variant == Variant::B) {
    const Eigen::VectorXd eta = ds.X * state.gamma;
    for (int i = 0; i < n; ++i)
      out.treatment += ds.T(i) * eta(i) - softplus(eta(i));
    for (Eigen::Index j = 0; j < state.gamma.size(); ++j)
      out.prior_gamma += normal_logpdf(state.gamma(j), 0.0, config.priors.gamma_var);
    for (Eigen::Index j = 0; j < state.xi.size(); ++j)
      out.prior_xi += normal_logpdf(state.xi(j), 0.0, config.priors.xi_var);
  }

  for (Eigen::Index j = 0; j < state.a.size(); ++j)
    out.prior_a += normal_logpdf(state.a(j), 0.0, config.priors.loading_var);
  for (Eigen::Index j = 0; j < state.beta.size(); ++j)
    out.prior_beta += normal_logpdf(state.beta(j), 0.0, config.priors.beta_var);
  out.prior_sigma_y = inv_wishart_logpdf(
      state.Sigma_Y, config.priors.resolved_sigma_y_dof(p), SpdMatrix::identity(p));
  out.prior_sigma2_h = inv_gamma_logpdf(state.sigma2_H, config.priors.sigma_h_shape,
                                        config.priors.sigma_h_scale);
  return out;
}

ChainState draw_state_from_priors(const Dataset& ds, const ModelConfig& config,
                                  RngStream& rng,
                                  const Eigen::VectorXd* fixed_gamma) {
  const int n = ds.n();
  const int p = ds.p();
  const int k = ds.k();
  config.priors.validate(p);
  ChainState s;

  s.a.resize(p);
  for (int j = 0; j < p; ++j)
    s.a(j) = std::sqrt(config.priors.loading_var) * rng.normal();
  const int n_beta = config.variant == Variant::A ? 2 + k : 2;
  s.beta.resize(n_beta);
  for (int j = 0; j < n_beta; ++j)
    s.beta(j) = std::sqrt(config.priors.beta_var) * rng.normal();
  s.Sigma_Y = inv_wishart_sample(config.priors.resolved_sigma_y_dof(p),
                                 SpdMatrix::identity(p), rng);
  s.sigma2_H = inv_gamma_sample(config.priors.sigma_h_shape,
                                config.priors.sigma_h_scale, rng);
  s.phi = config.spatial
              ? std::exp(config.priors.phi_log_mu +
                         config.priors.phi_log_sigma * rng.normal())
              : 1.0;
  if (config.variant == Variant::B) {
    if (fixed_gamma) {
      if (fixed_gamma->size() != k)
        throw Error("draw_state_from_priors: fixed gamma has wrong length");
      s.gamma = *fixed_gamma;
    } else {
      s.gamma.resize(k);
      for (int j = 0; j < k; ++j)
        s.gamma(j) = std::sqrt(config.priors.gamma_var) * rng.normal();
    }
    s.xi.resize(2);
    for (int j = 0; j < 2; ++j)
      s.xi(j) = std::sqrt(config.priors.xi_var) * rng.normal();
    refresh_propensity(s, ds);
  }

  // H given the rest: anchor from its prior, the field from its MVN.
  s.H.resize(n);
  const std::vector<int> idx = field_indices(ds, config);
  const Eigen::VectorXd mu = h_level_mean(s, ds, config.variant);
  if (config.spatial) {
    const Eigen::MatrixXd d_sub =
        subset_square(ds.D, idx) * config.distance_factor();
    const SpdMatrix sigma_h =
        build_sigma_h(d_sub, s.sigma2_H, s.phi, config.nugget);
    const Eigen::VectorXd h_sub = mvn_sample(subset(mu, idx), sigma_h, rng);
    for (size_t i = 0; i < idx.size(); ++i) s.H(idx[i]) = h_sub(static_cast<Eigen::Index>(i));
  } else {
    for (int i : idx) s.H(i) = mu(i) + std::sqrt(s.sigma2_H) * rng.normal();
  }
  if (config.anchored) {
    const int anchor = config.resolved_anchor(ds);
    s.H(anchor) = config.priors.anchor_mean +
                  std::sqrt(config.priors.anchor_var) * rng.normal();
  }
  return s;
}

}  // namespace lhfi
