#include "lhfi/validation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>

#include "lhfi/posterior.hpp"

namespace lhfi {

namespace {

Eigen::MatrixXd standardized_normal_matrix(int n, int cols, RngStream& rng) {
  Eigen::MatrixXd m(n, cols);
  for (int j = 0; j < cols; ++j) {
    std::vector<double> col(n);
    for (int i = 0; i < n; ++i) col[i] = rng.normal();
    col = standardize(col);
    for (int i = 0; i < n; ++i) m(i, j) = col[i];
  }
  return m;
}

std::vector<CountryInfo> synthetic_countries(
    int n, const std::vector<std::pair<double, double>>& coords) {
  std::vector<CountryInfo> out;
  for (int i = 0; i < n; ++i) {
    CountryInfo c;
    char buf[16];
    std::snprintf(buf, sizeof buf, "C%03d", i + 1);
    c.id = buf;
    c.name = buf;
    c.capital_lat_deg = coords[static_cast<size_t>(i)].first;
    c.capital_lon_deg = coords[static_cast<size_t>(i)].second;
    out.push_back(c);
  }
  return out;
}

void assign_income_groups(Dataset& ds, const Eigen::VectorXd& h_true) {
  static const char* kGroups[4] = {"low", "lower-middle", "upper-middle", "high"};
  std::vector<int> order(ds.countries.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return h_true(a) < h_true(b); });
  for (size_t r = 0; r < order.size(); ++r) {
    const size_t bucket = std::min<size_t>(3, 4 * r / order.size());
    ds.countries[static_cast<size_t>(order[r])].income_group = kGroups[bucket];
  }
}

// Y = H a' + E, rows of E ~ MVN(0, Sigma_Y).
Eigen::MatrixXd draw_y(const ChainState& s, int n, int p, RngStream& rng) {
  Eigen::MatrixXd z(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) z(i, j) = rng.normal();
  return s.H * s.a.transpose() +
         z * s.Sigma_Y.chol_lower().transpose().triangularView<Eigen::Upper>();
}

}  // namespace

SyntheticResult generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n < 3 || spec.p < 1 || spec.k < 1)
    throw Error("synthetic: need N >= 3, P >= 1, K >= 1");
  RngStream rng(spec.seed, 7001);

  const int n = spec.n, p = spec.p, k = spec.k;
  Dataset ds;
  ds.year = 0;
  ds.anchor_index = 0;
  for (int j = 1; j <= p; ++j) ds.metric_names.push_back("m" + std::to_string(j));
  for (int j = 1; j <= k; ++j) ds.covariate_names.push_back("x" + std::to_string(j));
  ds.X = standardized_normal_matrix(n, k, rng);
  ds.Y = Eigen::MatrixXd::Zero(n, p);  // filled after the latent draw

  std::vector<std::pair<double, double>> coords;
  for (int i = 0; i < n; ++i)
    coords.emplace_back(10.0 + 45.0 * rng.uniform(), 60.0 * rng.uniform());
  ds.countries = synthetic_countries(n, coords);
  ds.D = great_circle_matrix(coords);

  ModelConfig config;
  config.variant = spec.variant;
  config.spatial = spec.spatial;
  config.anchored = true;
  config.priors = spec.priors;
  config.nugget = spec.nugget;

  ChainState truth;
  if (spec.draw_from_priors) {
    // gamma first (it generates T), then everything else given the design.
    Eigen::VectorXd gamma(k);
    ds.T.resize(n);
    if (spec.variant == Variant::B) {
      for (int j = 0; j < k; ++j)
        gamma(j) = std::sqrt(config.priors.gamma_var) * rng.normal();
      const Eigen::VectorXd z = propensity_scores(ds.X, gamma);
      for (int i = 0; i < n; ++i) ds.T(i) = rng.uniform() < z(i) ? 1.0 : 0.0;
    } else {
      for (int i = 0; i < n; ++i) ds.T(i) = rng.uniform() < 0.5 ? 1.0 : 0.0;
    }
    truth = draw_state_from_priors(
        ds, config, rng, spec.variant == Variant::B ? &gamma : nullptr);
  } else {
    truth.a.resize(p);
    static const double kLoadings[5] = {1.0, 0.8, -0.5, 0.9, 0.7};
    for (int j = 0; j < p; ++j) truth.a(j) = kLoadings[j % 5];
    if (spec.a_true.size() == p) truth.a = spec.a_true;
    truth.Sigma_Y = SpdMatrix(0.5 * Eigen::MatrixXd::Identity(p, p));
    truth.sigma2_H = spec.sigma2_h;
    truth.phi = spec.phi;
    if (spec.variant == Variant::B) {
      truth.gamma.resize(k);
      static const double kGamma[3] = {0.8, -0.5, 0.3};
      for (int j = 0; j < k; ++j) truth.gamma(j) = kGamma[j % 3];
      if (spec.gamma_true.size() == k) truth.gamma = spec.gamma_true;
      truth.xi.resize(2);
      truth.xi << 0.3, 0.6;
      if (spec.xi_true.size() == 2) truth.xi = spec.xi_true;
      truth.beta.resize(2);
      truth.beta << spec.beta0, spec.beta1;
    } else {
      truth.beta.resize(2 + k);
      truth.beta(0) = spec.beta0;
      truth.beta(1) = spec.beta1;
      for (int j = 0; j < k; ++j) truth.beta(2 + j) = (j % 2 == 0) ? 0.2 : -0.1;
    }
  }

  if (!spec.draw_from_priors) {
    // Treatment assignment from the fixed truths.
    ds.T.resize(n);
    if (spec.variant == Variant::B) {
      const Eigen::VectorXd z = propensity_scores(ds.X, truth.gamma);
      for (int i = 0; i < n; ++i) ds.T(i) = rng.uniform() < z(i) ? 1.0 : 0.0;
      refresh_propensity(truth, ds);
    } else {
      for (int i = 0; i < n; ++i) ds.T(i) = rng.uniform() < 0.5 ? 1.0 : 0.0;
    }

    // Center the field mean so the latent scale stays near the anchor's
    // space.
    {
      const Eigen::VectorXd mu0 = h_level_mean(truth, ds, spec.variant);
      double field_sum = 0;
      for (int i = 1; i < n; ++i) field_sum += mu0(i) - truth.beta(0);
      truth.beta(0) = spec.beta0 - field_sum / (n - 1);
    }

    // Latent field and anchor.
    truth.H.resize(n);
    const std::vector<int> idx = field_indices(ds, config);
    const Eigen::VectorXd mu = h_level_mean(truth, ds, spec.variant);
    if (spec.spatial) {
      const SpdMatrix sigma_h = build_sigma_h(
          subset_square(ds.D, idx), truth.sigma2_H, truth.phi, spec.nugget);
      const Eigen::VectorXd h_f = mvn_sample(subset(mu, idx), sigma_h, rng);
      for (size_t i = 0; i < idx.size(); ++i)
        truth.H(idx[i]) = h_f(static_cast<Eigen::Index>(i));
    } else {
      for (int i : idx)
        truth.H(i) = mu(i) + std::sqrt(truth.sigma2_H) * rng.normal();
    }
    truth.H(0) = spec.priors.anchor_mean +
                 std::sqrt(spec.priors.anchor_var) * rng.normal();
  }

  Eigen::MatrixXd y_raw = draw_y(truth, n, p, rng);

  // Standardizing Y maps the truth exactly: H* = H - Hbar, a* = a / s.
  SyntheticResult out;
  out.y_shift.resize(p);
  out.y_scale.resize(p);
  ds.Y.resize(n, p);
  for (int j = 0; j < p; ++j) {
    const double mean = y_raw.col(j).mean();
    const double sd = std::sqrt((y_raw.col(j).array() - mean).square().sum() / (n - 1));
    if (!(sd > 0)) throw Error("synthetic: degenerate metric column");
    out.y_shift(j) = mean;
    out.y_scale(j) = sd;
    ds.Y.col(j) = (y_raw.col(j).array() - mean) / sd;
  }
  const double h_bar = truth.H.mean();
  truth.H.array() -= h_bar;
  truth.beta(0) -= h_bar;
  Eigen::MatrixXd sy = truth.Sigma_Y.matrix();
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) sy(i, j) /= out.y_scale(i) * out.y_scale(j);
  truth.Sigma_Y = SpdMatrix(sy);
  truth.a = (truth.a.array() / out.y_scale.array()).matrix();

  assign_income_groups(ds, truth.H);
  ds.validate();
  out.dataset = std::move(ds);
  out.truth = std::move(truth);
  return out;
}

// --- Geweke harness ---

double GewekeReport::max_abs_z() const {
  if (diverged) return std::numeric_limits<double>::infinity();
  double m = 0;
  for (const auto& f : functions) m = std::max(m, std::abs(f.z));
  return m;
}

bool GewekeReport::pass(double z_limit) const {
  if (diverged) return false;
  for (const auto& f : functions)
    if (!std::isfinite(f.z) || std::abs(f.z) >= z_limit) return false;
  return !functions.empty();
}

Dataset make_desk_dataset(int n, int p, int k, std::uint64_t seed) {
  RngStream rng(seed, 4242);
  Dataset ds;
  ds.year = 0;
  ds.anchor_index = 0;
  for (int j = 1; j <= p; ++j) ds.metric_names.push_back("m" + std::to_string(j));
  for (int j = 1; j <= k; ++j) ds.covariate_names.push_back("x" + std::to_string(j));
  ds.X = standardized_normal_matrix(n, k, rng);
  ds.Y = standardized_normal_matrix(n, p, rng);
  std::vector<std::pair<double, double>> coords;
  for (int i = 0; i < n; ++i)
    coords.emplace_back(3.0 + 9.0 * rng.uniform(), 12.0 * rng.uniform());
  ds.countries = synthetic_countries(n, coords);
  ds.D = great_circle_matrix(coords);
  ds.T.resize(n);
  for (int i = 0; i < n; ++i) ds.T(i) = i % 2;
  ds.validate();
  return ds;
}

ModelConfig make_desk_config(Variant variant, int p) {
  ModelConfig config;
  config.variant = variant;
  config.spatial = true;
  config.anchored = true;
  config.nugget = 1e-8;
  config.priors.loading_var = 1.0;
  config.priors.beta_var = 1.0;
  config.priors.xi_var = 1.0;
  config.priors.gamma_var = 1.0;
  config.priors.sigma_y_dof = p + 10.0;
  config.priors.sigma_h_shape = 5.0;
  config.priors.sigma_h_scale = 2.0;
  config.priors.phi_log_mu = 0.4;
  config.priors.phi_log_sigma = 0.5;
  config.priors.anchor_mean = -2.0;
  config.priors.anchor_var = 0.1;
  return config;
}

namespace {

struct TestFunction {
  std::string name;
  std::function<double(const ChainState&)> eval;
};

std::vector<TestFunction> outcome_functions(Variant variant, int field0,
                                            int field1) {
  std::vector<TestFunction> base;
  base.push_back({"H1", [field0](const ChainState& s) { return s.H(field0); }});
  base.push_back({"a1", [](const ChainState& s) { return s.a(0); }});
  base.push_back({"beta1", [](const ChainState& s) { return s.beta(1); }});
  base.push_back({"sigma2_H", [](const ChainState& s) { return s.sigma2_H; }});
  base.push_back({"log_phi", [](const ChainState& s) { return std::log(s.phi); }});
  base.push_back(
      {"Sigma_Y11", [](const ChainState& s) { return s.Sigma_Y.matrix()(0, 0); }});
  if (variant == Variant::B)
    base.push_back({"xi1", [](const ChainState& s) { return s.xi(0); }});

  std::vector<TestFunction> out = base;
  for (const auto& f : base) {
    auto inner = f.eval;
    out.push_back({f.name + "^2",
                   [inner](const ChainState& s) { const double v = inner(s); return v * v; }});
  }
  out.push_back({"H1*H2", [field0, field1](const ChainState& s) {
                   return s.H(field0) * s.H(field1);
                 }});
  out.push_back({"a1*H1", [field0](const ChainState& s) {
                   return s.a(0) * s.H(field0);
                 }});
  return out;
}

GewekeFunctionResult compare_series(const std::string& name,
                                    const Eigen::VectorXd& marginal,
                                    const Eigen::VectorXd& successive) {
  GewekeFunctionResult r;
  r.name = name;
  r.mean_marginal = marginal.mean();
  const double n_mc = static_cast<double>(marginal.size());
  const double var_mc =
      (marginal.array() - r.mean_marginal).square().sum() / (n_mc - 1);
  r.se_marginal = std::sqrt(var_mc / n_mc);
  r.mean_successive = successive.mean();
  r.se_successive = mcmc_se(successive);
  const double denom = std::sqrt(r.se_marginal * r.se_marginal +
                                 r.se_successive * r.se_successive);
  r.z = denom > 0 ? (r.mean_marginal - r.mean_successive) / denom : 0.0;
  return r;
}

void redraw_y_inplace(Dataset& ds, const ChainState& s, RngStream& rng) {
  Eigen::MatrixXd z(ds.n(), ds.p());
  for (int i = 0; i < ds.n(); ++i)
    for (int j = 0; j < ds.p(); ++j) z(i, j) = rng.normal();
  ds.Y = s.H * s.a.transpose() +
         z * s.Sigma_Y.chol_lower().transpose().triangularView<Eigen::Upper>();
}

void redraw_t_inplace(Dataset& ds, const Eigen::VectorXd& gamma,
                      RngStream& rng) {
  const Eigen::VectorXd z = propensity_scores(ds.X, gamma);
  for (int i = 0; i < ds.n(); ++i) ds.T(i) = rng.uniform() < z(i) ? 1.0 : 0.0;
}

}  // namespace

GewekeReport geweke_test(const GewekeOptions& options) {
  if (options.replicas < 1000) throw Error("geweke: too few replicas");
  const long r_n = options.replicas;
  GewekeReport report;

  Dataset ds = make_desk_dataset(options.n, options.p, options.k,
                                 options.seed ^ 0x9e3779b9ULL);
  const ModelConfig config = make_desk_config(options.variant, options.p);

  // Fixed design stage draw: gamma* from its prior, T from the logistic
  // model given gamma*. The outcome stage conditions on both throughout.
  Eigen::VectorXd gamma_star;
  {
    RngStream design_rng(options.seed, 9000);
    if (options.variant == Variant::B) {
      gamma_star.resize(options.k);
      for (int j = 0; j < options.k; ++j)
        gamma_star(j) = std::sqrt(config.priors.gamma_var) * design_rng.normal();
      redraw_t_inplace(ds, gamma_star, design_rng);
    }
  }
  const Eigen::VectorXd* fixed_gamma =
      options.variant == Variant::B ? &gamma_star : nullptr;

  const std::vector<int> field = field_indices(ds, config);
  const auto funcs =
      outcome_functions(options.variant, field.at(0), field.at(1));
  const auto n_fun = static_cast<Eigen::Index>(funcs.size());

  // Marginal-conditional: iid prior replicas.
  Eigen::MatrixXd mc(r_n, n_fun);
  {
    RngStream rng(options.seed, 9100);
    for (long r = 0; r < r_n; ++r) {
      const ChainState s = draw_state_from_priors(ds, config, rng, fixed_gamma);
      for (Eigen::Index f = 0; f < n_fun; ++f) mc(r, f) = funcs[f].eval(s);
    }
  }

  // Successive-conditional: production sweep alternating with Y redraws.
  Eigen::MatrixXd sc(r_n, n_fun);
  {
    Dataset ds_sc = ds;
    SamplerOptions opts;
    opts.mutation = options.mutation;
    opts.block_h_update = options.block_h;
    opts.block_mean_update = options.block_mean;
    opts.collapse = options.collapse;
    opts.mask.gamma = false;  // design stage tested separately below
    GibbsSampler sampler(ds_sc, config, opts);
    ChainStreams streams = ChainStreams::make(options.seed, 4097);
    RngStream init_rng(options.seed, 9200);
    sampler.set_state(
        draw_state_from_priors(ds_sc, config, init_rng, fixed_gamma));
    redraw_y_inplace(ds_sc, sampler.state(), streams.data);
    for (long r = 0; r < r_n; ++r) {
      try {
        sampler.sweep(streams, options.phi_proposal_sd,
                      options.gamma_proposal_sd);
        if (!sampler.state().finite()) throw Error("non-finite state");
      } catch (const Error&) {
        report.diverged = true;
        report.diverged_at = r;
        return report;
      }
      for (Eigen::Index f = 0; f < n_fun; ++f)
        sc(r, f) = funcs[f].eval(sampler.state());
      redraw_y_inplace(ds_sc, sampler.state(), streams.data);
    }
  }

  for (Eigen::Index f = 0; f < n_fun; ++f)
    report.functions.push_back(
        compare_series(funcs[f].name, mc.col(f), sc.col(f)));

  if (options.variant == Variant::B) {
    // Design stage: the cut propensity model is its own Bayesian model
    // (gamma prior, Bernoulli-logit likelihood); its sampler pair is the
    // production gamma step against T redraws.
    Eigen::MatrixXd mc_g(r_n, 2), sc_g(r_n, 2);
    {
      RngStream rng(options.seed, 9300);
      Dataset tmp = ds;
      for (long r = 0; r < r_n; ++r) {
        Eigen::VectorXd gamma(options.k);
        for (int j = 0; j < options.k; ++j)
          gamma(j) = std::sqrt(config.priors.gamma_var) * rng.normal();
        redraw_t_inplace(tmp, gamma, rng);
        mc_g(r, 0) = gamma(0);
        mc_g(r, 1) = gamma(0) * gamma(0);
      }
    }
    {
      Dataset ds_sc = ds;
      SamplerOptions opts;
      opts.mutation = options.mutation;
      opts.mask = UpdateMask{false, false, false, false, false,
                             false, false, false, true};
      GibbsSampler sampler(ds_sc, config, opts);
      ChainStreams streams = ChainStreams::make(options.seed, 4099);
      RngStream init_rng(options.seed, 9400);
      sampler.set_state(draw_state_from_priors(ds_sc, config, init_rng));
      redraw_t_inplace(ds_sc, sampler.state().gamma, streams.data);
      for (long r = 0; r < r_n; ++r) {
        sampler.sweep(streams, options.phi_proposal_sd,
                      options.gamma_proposal_sd);
        const double g1 = sampler.state().gamma(0);
        sc_g(r, 0) = g1;
        sc_g(r, 1) = g1 * g1;
        redraw_t_inplace(ds_sc, sampler.state().gamma, streams.data);
      }
    }
    report.functions.push_back(compare_series("gamma1", mc_g.col(0), sc_g.col(0)));
    report.functions.push_back(
        compare_series("gamma1^2", mc_g.col(1), sc_g.col(1)));
  }
  return report;
}

// --- grid oracle ---

double get_state_param(const ChainState& s, const std::string& param) {
  if (param == "sigma2_H") return s.sigma2_H;
  if (param == "phi") return s.phi;
  const auto colon = param.find(':');
  if (colon == std::string::npos) throw Error("bad grid parameter: " + param);
  const std::string head = param.substr(0, colon);
  const int idx = std::stoi(param.substr(colon + 1));
  if (head == "H") return s.H(idx);
  if (head == "a") return s.a(idx);
  if (head == "beta") return s.beta(idx);
  if (head == "xi") return s.xi(idx);
  if (head == "gamma") return s.gamma(idx);
  throw Error("bad grid parameter: " + param);
}

void set_state_param(ChainState& s, const std::string& param, double v) {
  if (param == "sigma2_H") {
    s.sigma2_H = v;
    return;
  }
  if (param == "phi") {
    s.phi = v;
    return;
  }
  const auto colon = param.find(':');
  if (colon == std::string::npos) throw Error("bad grid parameter: " + param);
  const std::string head = param.substr(0, colon);
  const int idx = std::stoi(param.substr(colon + 1));
  if (head == "H")
    s.H(idx) = v;
  else if (head == "a")
    s.a(idx) = v;
  else if (head == "beta")
    s.beta(idx) = v;
  else if (head == "xi")
    s.xi(idx) = v;
  else if (head == "gamma")
    s.gamma(idx) = v;
  else
    throw Error("bad grid parameter: " + param);
}

GridOracleResult grid_oracle(const Dataset& ds, const ModelConfig& config,
                             const ChainState& frozen,
                             const std::vector<GridAxis>& axes) {
  if (axes.empty()) throw Error("grid_oracle: no axes");
  long total = 1;
  for (const auto& ax : axes) {
    if (ax.points < 2) throw Error("grid_oracle: each axis needs >= 2 points");
    total *= ax.points;
    if (total > 10'000'000) throw Error("grid_oracle: grid exceeds 1e7 points");
  }
  bool gamma_gridded = false;
  for (const auto& ax : axes)
    if (ax.param.rfind("gamma:", 0) == 0) gamma_gridded = true;

  ChainState s = frozen;
  if (config.variant == Variant::B) refresh_propensity(s, ds);

  std::vector<double> lp(static_cast<size_t>(total));
  std::vector<int> index(axes.size(), 0);
  std::vector<double> coord(axes.size(), 0.0);
  for (long t = 0; t < total; ++t) {
    long rem = t;
    for (size_t a = 0; a < axes.size(); ++a) {
      index[a] = static_cast<int>(rem % axes[a].points);
      rem /= axes[a].points;
      coord[a] = axes[a].lo + (axes[a].hi - axes[a].lo) * index[a] /
                                  (axes[a].points - 1);
      set_state_param(s, axes[a].param, coord[a]);
    }
    if (gamma_gridded) refresh_propensity(s, ds);
    lp[static_cast<size_t>(t)] = log_joint(s, ds, config).total();
  }

  const double m = *std::max_element(lp.begin(), lp.end());
  double w_sum = 0;
  for (double v : lp) w_sum += std::exp(v - m);

  GridOracleResult out;
  out.total_points = total;
  std::vector<double> mean(axes.size(), 0.0), m2(axes.size(), 0.0);
  double mass = 0;
  for (long t = 0; t < total; ++t) {
    const double w = std::exp(lp[static_cast<size_t>(t)] - m) / w_sum;
    mass += w;
    long rem = t;
    for (size_t a = 0; a < axes.size(); ++a) {
      const int ia = static_cast<int>(rem % axes[a].points);
      rem /= axes[a].points;
      const double x = axes[a].lo + (axes[a].hi - axes[a].lo) * ia /
                                        (axes[a].points - 1);
      mean[a] += w * x;
      m2[a] += w * x * x;
    }
  }
  out.mass_sum = mass;
  for (size_t a = 0; a < axes.size(); ++a) {
    GridMarginal gm;
    gm.param = axes[a].param;
    gm.mean = mean[a];
    gm.sd = std::sqrt(std::max(0.0, m2[a] - mean[a] * mean[a]));
    out.marginals.push_back(gm);
  }
  return out;
}

// --- frozen tiny-instance oracle suite ---

namespace {

struct OracleInstance {
  std::string name;
  int n = 3;
  std::vector<std::string> free_params;
  UpdateMask mask;
};

std::vector<GridAxis> refined_axes(const Dataset& ds, const ModelConfig& config,
                                   const ChainState& frozen,
                                   const std::vector<std::string>& params,
                                   int coarse_points, int fine_points) {
  std::vector<GridAxis> coarse;
  for (const auto& p : params) {
    GridAxis ax;
    ax.param = p;
    if (p == "phi") {
      ax.lo = 0.05;
      ax.hi = 14.0;
    } else if (p == "sigma2_H") {
      ax.lo = 0.01;
      ax.hi = 8.0;
    } else {
      ax.lo = -7.0;
      ax.hi = 7.0;
    }
    ax.points = coarse_points;
    coarse.push_back(ax);
  }
  const GridOracleResult pass1 = grid_oracle(ds, config, frozen, coarse);
  std::vector<GridAxis> fine;
  for (size_t a = 0; a < coarse.size(); ++a) {
    GridAxis ax = coarse[a];
    const double mean = pass1.marginals[a].mean;
    const double sd = std::max(pass1.marginals[a].sd, 1e-3);
    ax.lo = mean - 6.5 * sd;
    ax.hi = mean + 6.5 * sd;
    if (ax.param == "phi" || ax.param == "sigma2_H") ax.lo = std::max(ax.lo, 1e-3);
    ax.points = fine_points;
    fine.push_back(ax);
  }
  return fine;
}

}  // namespace

std::vector<OracleComparison> run_oracle_suite(std::uint64_t seed,
                                               long sweeps) {
  std::vector<OracleInstance> instances;
  {
    OracleInstance a;
    a.name = "anchor_loading";
    a.n = 3;
    a.free_params = {"H:0", "H:1", "H:2", "a:0"};
    a.mask = UpdateMask{true, true, true, false, false, false, false, false, false};
    instances.push_back(a);

    OracleInstance b;
    b.name = "field3";
    b.n = 4;
    b.free_params = {"H:1", "H:2", "H:3"};
    b.mask = UpdateMask{true, false, false, false, false, false, false, false, false};
    instances.push_back(b);

    OracleInstance c;
    c.name = "field_range";
    c.n = 3;
    c.free_params = {"H:1", "H:2", "phi"};
    c.mask = UpdateMask{true, false, false, false, false, false, true, false, false};
    instances.push_back(c);
  }

  std::vector<OracleComparison> out;
  for (size_t k = 0; k < instances.size(); ++k) {
    const OracleInstance& inst = instances[k];
    const Dataset ds = make_desk_dataset(inst.n, 1, 1, seed + 17 * k + 3);
    const ModelConfig config = make_desk_config(Variant::A, 1);

    ChainState frozen;
    frozen.H = Eigen::VectorXd::Zero(inst.n);
    frozen.H(0) = config.priors.anchor_mean;
    frozen.a = Eigen::VectorXd::Constant(1, 0.9);
    frozen.Sigma_Y = SpdMatrix(0.5 * Eigen::MatrixXd::Identity(1, 1));
    frozen.beta = Eigen::VectorXd::Zero(3);  // (intercept, T, x1)
    frozen.sigma2_H = 0.3;
    frozen.phi = 1.2;

    const std::vector<GridAxis> axes =
        refined_axes(ds, config, frozen, inst.free_params, 15,
                     inst.free_params.size() >= 4 ? 41 : 71);
    const GridOracleResult grid = grid_oracle(ds, config, frozen, axes);

    // Masked sampler on the same sub-model, started from the frozen state.
    SamplerOptions opts;
    opts.mask = inst.mask;
    GibbsSampler sampler(ds, config, opts);
    sampler.set_state(frozen);
    ChainStreams streams = ChainStreams::make(seed + k, 71);
    const long burn = sweeps / 5;
    const auto n_free = static_cast<Eigen::Index>(inst.free_params.size());
    Eigen::MatrixXd draws(sweeps, n_free);
    for (long t = 0; t < burn + sweeps; ++t) {
      sampler.sweep(streams, 0.7, 0.4);
      if (t >= burn)
        for (Eigen::Index f = 0; f < n_free; ++f)
          draws(t - burn, f) =
              get_state_param(sampler.state(), inst.free_params[f]);
    }

    for (Eigen::Index f = 0; f < n_free; ++f) {
      OracleComparison cmp;
      cmp.instance = inst.name;
      cmp.param = inst.free_params[f];
      cmp.grid_mean = grid.marginals[f].mean;
      cmp.grid_sd = grid.marginals[f].sd;
      cmp.mcmc_mean = draws.col(f).mean();
      cmp.mcse = mcmc_se(draws.col(f));
      cmp.pass = std::abs(cmp.grid_mean - cmp.mcmc_mean) <= 3.0 * cmp.mcse;
      out.push_back(cmp);
    }
  }
  return out;
}

// --- quick unit self-checks ---

std::vector<UnitCheck> unit_suite() {
  std::vector<UnitCheck> checks;
  auto add = [&checks](const std::string& name, bool pass,
                       const std::string& detail) {
    checks.push_back({name, pass, detail});
  };
  char buf[128];

  {
    const double r0 = spatial_correlation(0.0, 1.7);
    const double re = spatial_correlation(1.7, 1.7);
    std::snprintf(buf, sizeof buf, "rho(0)=%.12g rho(phi,phi)=%.12g", r0, re);
    add("spatial_correlation", std::abs(r0 - 1.0) < 1e-12 &&
                                   std::abs(re - std::exp(-1.0)) < 1e-12,
        buf);
  }
  {
    const double q = great_circle_distance_mm(0, 0, 0, 90);
    const double anti = great_circle_distance_mm(0, 0, 0, 180);
    std::snprintf(buf, sizeof buf, "quarter=%.6f antipode=%.6f", q, anti);
    add("haversine", std::abs(q - M_PI * 6.371 / 2) < 1e-4 &&
                         std::abs(anti - M_PI * 6.371) < 1e-4,
        buf);
  }
  {
    Eigen::MatrixXd x(1, 1);
    x << 0.0;
    Eigen::VectorXd g(1);
    g << 3.0;
    const double z = propensity_scores(x, g)(0);
    std::snprintf(buf, sizeof buf, "expit(0)=%.12g", z);
    add("expit", z == 0.5, buf);
  }
  {
    const auto s = standardize({1, 2, 3});
    add("standardize",
        std::abs(s[0] + 1) < 1e-12 && std::abs(s[1]) < 1e-12 &&
            std::abs(s[2] - 1) < 1e-12,
        "standardize([1,2,3])");
  }
  {
    Eigen::VectorXd x(1), mu(1);
    x << 0;
    mu << 0;
    const double v = mvn_logpdf(x, mu, SpdMatrix::identity(1));
    std::snprintf(buf, sizeof buf, "logpdf=%.9f", v);
    add("mvn_logpdf", std::abs(v + 0.9189385332046727) < 1e-9, buf);
  }
  {
    const auto t = dichotomize_treatment({0, 98, 410});
    add("dichotomize", t == std::vector<int>({0, 0, 1}), "strict above median");
  }
  {
    RngStream rng(7, 3);
    const int draws = 20000;
    Eigen::Matrix2d acc = Eigen::Matrix2d::Zero();
    for (int i = 0; i < draws; ++i)
      acc += inv_wishart_sample(10.0, SpdMatrix::identity(2), rng).matrix();
    acc /= draws;
    const double target = 1.0 / 7.0;
    std::snprintf(buf, sizeof buf, "mean diag %.4f %.4f (target %.4f)",
                  acc(0, 0), acc(1, 1), target);
    add("inv_wishart_mean",
        std::abs(acc(0, 0) - target) < 0.07 * target &&
            std::abs(acc(1, 1) - target) < 0.07 * target,
        buf);
  }
  {
    RngStream a(42, 5), b(42, 5);
    bool same = true;
    for (int i = 0; i < 100; ++i) same = same && a.normal() == b.normal();
    add("rng_determinism", same, "identical (seed, stream) sequences");
  }
  return checks;
}

}  // namespace lhfi
