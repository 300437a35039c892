// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Heavier Monte Carlo settings live here, not in the unit tests.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lhfi/ingest.hpp"
#include "lhfi/model.hpp"
#include "lhfi/posterior.hpp"
#include "lhfi/sampler.hpp"
#include "lhfi/samples_io.hpp"
#include "lhfi/validation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lhfi;

namespace {

struct Outcome {
  int criterion;
  bool pass;
  std::string detail;
};

std::vector<Outcome> g_outcomes;

void record(int criterion, bool pass, const std::string& detail) {
  g_outcomes.push_back({criterion, pass, detail});
  std::cout << (pass ? "[PASS]" : "[FAIL]") << " criterion " << criterion
            << ": " << detail << std::endl;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(LHFI_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  return WEXITSTATUS(std::system(cmd.c_str()));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// --- criterion 1: Geweke joint-distribution suite ---

void criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  std::string detail;

  for (Variant v : {Variant::A, Variant::B}) {
    GewekeOptions opts;
    opts.variant = v;
    opts.replicas = 100000;
    opts.seed = 20240601;
    const GewekeReport report = geweke_test(opts);
    const bool ok = report.pass(4.0);
    pass = pass && ok;
    detail += std::string("model ") + variant_name(v) +
              " max|z|=" + fmt(report.max_abs_z()) + (ok ? " ok; " : " FAIL; ");
  }

  for (Mutation m : all_mutations()) {
    GewekeOptions opts;
    opts.variant = Variant::B;
    opts.replicas = 100000;
    opts.seed = 20240601;
    opts.mutation = m;
    const GewekeReport report = geweke_test(opts);
    const bool caught = report.max_abs_z() > 10.0;
    pass = pass && caught;
    detail += mutation_name(m) + " max|z|=" + fmt(report.max_abs_z()) +
              (caught ? " caught; " : " MISSED; ");
  }

  const double dt = seconds_since(t0);
  pass = pass && dt < 1800.0;
  record(1, pass, "Geweke suite (" + fmt(dt) + " s): " + detail);
}

// --- criterion 2: grid-oracle equivalence ---

void criterion_2() {
  const auto comparisons = run_oracle_suite(7, 50000);
  bool pass = !comparisons.empty();
  std::string detail;
  for (const auto& c : comparisons) {
    pass = pass && c.pass;
    detail += c.instance + "/" + c.param + " d=" +
              fmt(std::abs(c.grid_mean - c.mcmc_mean)) + " (3mcse=" +
              fmt(3 * c.mcse) + (c.pass ? "); " : " FAIL); ");
  }
  record(2, pass, "grid oracle: " + detail);
}

// --- criterion 3: conjugate steps against closed forms ---

struct MomentCheck {
  bool pass = true;
  std::string detail;

  void check_mean(const std::string& name, double emp, double expected,
                  double se) {
    const bool ok = std::abs(emp - expected) <= 3 * se;
    pass = pass && ok;
    if (!ok)
      detail += name + " mean off by " + fmt(std::abs(emp - expected)) +
                " (3se=" + fmt(3 * se) + "); ";
  }
  void check_var(const std::string& name, double emp, double expected,
                 double se) {
    const bool ok = std::abs(emp - expected) <= 3 * se;
    pass = pass && ok;
    if (!ok)
      detail += name + " var off by " + fmt(std::abs(emp - expected)) +
                " (3se=" + fmt(3 * se) + "); ";
  }
};

void criterion_3() {
  const int n_draws = 100000;
  const Dataset ds = make_desk_dataset(9, 2, 1, 2024);
  const ModelConfig config = make_desk_config(Variant::B, 2);
  GibbsSampler sampler(ds, config);
  ChainState frozen;
  {
    RngStream rng(77, 1);
    frozen = draw_state_from_priors(ds, config, rng);
    frozen.sigma2_H = 0.5;
    frozen.phi = 1.4;
  }
  sampler.set_state(frozen);

  // dense-inverse conditioning pieces, independent of the sampler's solves
  const Eigen::MatrixXd sy_inv = frozen.Sigma_Y.matrix().inverse();
  const std::vector<int>& field = sampler.field();
  const Eigen::MatrixXd d_sub = subset_square(ds.D, field);
  Eigen::MatrixXd r = (-d_sub / frozen.phi).array().exp();
  r.diagonal().array() += config.nugget;
  const Eigen::MatrixXd sigma_h = frozen.sigma2_H * r;
  const Eigen::MatrixXd sigma_h_inv = sigma_h.inverse();
  const Eigen::VectorXd mu_field =
      subset(h_level_mean(frozen, ds, Variant::B), field);

  MomentCheck mc;
  RngStream rng(99, 5);

  auto empirical = [&](auto&& draw_once, int dim) {
    Eigen::MatrixXd draws(n_draws, dim);
    for (int t = 0; t < n_draws; ++t) {
      sampler.set_state(frozen);
      draws.row(t) = draw_once();
    }
    return draws;
  };
  auto mean_of = [](const Eigen::MatrixXd& d, int j) { return d.col(j).mean(); };
  auto var_of = [](const Eigen::MatrixXd& d, int j) {
    const double m = d.col(j).mean();
    return (d.col(j).array() - m).square().sum() / (d.rows() - 1.0);
  };
  auto m4_of = [](const Eigen::MatrixXd& d, int j) {
    const double m = d.col(j).mean();
    return (d.col(j).array() - m).pow(4).sum() / d.rows();
  };

  // step 1: anchor site and the first field site (both have fixed
  // conditioning at the top of the scan order)
  {
    const Eigen::MatrixXd draws = empirical(
        [&]() -> Eigen::RowVector2d {
          sampler.step_h(rng);
          return {sampler.state().H(0), sampler.state().H(field[0])};
        },
        2);
    const double like_prec = frozen.a.dot(sy_inv * frozen.a);
    {
      const double prec = like_prec + 1.0 / config.priors.anchor_var;
      const double mean = (frozen.a.dot(sy_inv * ds.Y.row(0).transpose()) +
                           config.priors.anchor_mean / config.priors.anchor_var) /
                          prec;
      const double v = 1.0 / prec;
      mc.check_mean("H_anchor", mean_of(draws, 0), mean, std::sqrt(v / n_draws));
      mc.check_var("H_anchor", var_of(draws, 0), v,
                   v * std::sqrt(2.0 / (n_draws - 1)));
    }
    {
      const double q11 = sigma_h_inv(0, 0);
      Eigen::VectorXd diff(field.size());
      for (size_t j = 0; j < field.size(); ++j)
        diff(static_cast<Eigen::Index>(j)) = frozen.H(field[j]) - mu_field(j);
      const double m_r =
          mu_field(0) - (sigma_h_inv.row(0).dot(diff) - q11 * diff(0)) / q11;
      const double prec = like_prec + q11;
      const double mean =
          (frozen.a.dot(sy_inv * ds.Y.row(field[0]).transpose()) + q11 * m_r) /
          prec;
      const double v = 1.0 / prec;
      mc.check_mean("H_site", mean_of(draws, 1), mean, std::sqrt(v / n_draws));
      mc.check_var("H_site", var_of(draws, 1), v,
                   v * std::sqrt(2.0 / (n_draws - 1)));
    }
  }

  // step 2: loadings
  {
    const Eigen::MatrixXd draws = empirical(
        [&]() -> Eigen::RowVector2d {
          sampler.step_a(rng);
          return {sampler.state().a(0), sampler.state().a(1)};
        },
        2);
    const Eigen::MatrixXd v_prec =
        frozen.H.squaredNorm() * sy_inv +
        Eigen::MatrixXd::Identity(2, 2) / config.priors.loading_var;
    const Eigen::MatrixXd cov = v_prec.inverse();
    const Eigen::VectorXd mean = cov * (sy_inv * ds.Y.transpose() * frozen.H);
    for (int j = 0; j < 2; ++j) {
      mc.check_mean("a" + std::to_string(j), mean_of(draws, j), mean(j),
                    std::sqrt(cov(j, j) / n_draws));
      mc.check_var("a" + std::to_string(j), var_of(draws, j), cov(j, j),
                   cov(j, j) * std::sqrt(2.0 / (n_draws - 1)));
    }
  }

  // step 3: metric covariance
  {
    const Eigen::MatrixXd draws = empirical(
        [&]() -> Eigen::RowVector3d {
          sampler.step_sigma_y(rng);
          const Eigen::MatrixXd& m = sampler.state().Sigma_Y.matrix();
          return {m(0, 0), m(1, 0), m(1, 1)};
        },
        3);
    const Eigen::MatrixXd resid = ds.Y - frozen.H * frozen.a.transpose();
    Eigen::MatrixXd s_n = resid.transpose() * resid;
    s_n.diagonal().array() += 1.0;
    const double nu_n = config.priors.resolved_sigma_y_dof(2) + 9;
    const Eigen::MatrixXd mean = s_n / (nu_n - 2 - 1);
    const double idx[3][2] = {{0, 0}, {1, 0}, {1, 1}};
    for (int c = 0; c < 3; ++c) {
      const auto i = static_cast<int>(idx[c][0]);
      const auto j = static_cast<int>(idx[c][1]);
      const std::string name = "SigmaY" + std::to_string(i) + std::to_string(j);
      mc.check_mean(name, mean_of(draws, c), mean(i, j),
                    std::sqrt(var_of(draws, c) / n_draws));
      if (i == j) {
        // diagonal marginal is IG((nu - p + 1)/2, s_ii / 2)
        const double shape = 0.5 * (nu_n - 2 + 1);
        const double rate = 0.5 * s_n(i, i);
        const double var = rate * rate / ((shape - 1) * (shape - 1) * (shape - 2));
        mc.check_var(name, var_of(draws, c), var,
                     std::sqrt((m4_of(draws, c) - var * var) / n_draws));
      }
    }
  }

  // step 4: field variance
  {
    const Eigen::MatrixXd draws = empirical(
        [&]() -> Eigen::Matrix<double, 1, 1> {
          sampler.step_sigma2_h(rng);
          return Eigen::Matrix<double, 1, 1>(sampler.state().sigma2_H);
        },
        1);
    Eigen::VectorXd diff(field.size());
    for (size_t j = 0; j < field.size(); ++j)
      diff(static_cast<Eigen::Index>(j)) = frozen.H(field[j]) - mu_field(j);
    const double shape = 0.5 * 8 + config.priors.sigma_h_shape;
    const double rate =
        0.5 * diff.dot((sigma_h / frozen.sigma2_H).inverse() * diff) +
        config.priors.sigma_h_scale;
    const double mean = rate / (shape - 1);
    const double var = rate * rate / ((shape - 1) * (shape - 1) * (shape - 2));
    mc.check_mean("sigma2_H", mean_of(draws, 0), mean, std::sqrt(var / n_draws));
    mc.check_var("sigma2_H", var_of(draws, 0), var,
                 std::sqrt((m4_of(draws, 0) - var * var) / n_draws));
  }

  // steps 5/6: regression coefficients
  {
    const Eigen::MatrixXd draws = empirical(
        [&]() -> Eigen::RowVector2d {
          sampler.step_beta(rng);
          return {sampler.state().beta(0), sampler.state().beta(1)};
        },
        2);
    const Eigen::MatrixXd wf = subset_rows(design_matrix(ds, Variant::B), field);
    const Eigen::VectorXd d = subset(frozen.H, field) -
                              subset_rows(frozen.g, field) * frozen.xi;
    const Eigen::MatrixXd v_prec =
        wf.transpose() * sigma_h_inv * wf +
        Eigen::MatrixXd::Identity(2, 2) / config.priors.beta_var;
    const Eigen::MatrixXd cov = v_prec.inverse();
    const Eigen::VectorXd mean = cov * (wf.transpose() * sigma_h_inv * d);
    for (int j = 0; j < 2; ++j) {
      mc.check_mean("beta" + std::to_string(j), mean_of(draws, j), mean(j),
                    std::sqrt(cov(j, j) / n_draws));
      mc.check_var("beta" + std::to_string(j), var_of(draws, j), cov(j, j),
                   cov(j, j) * std::sqrt(2.0 / (n_draws - 1)));
    }
  }

  // step 8: subclass effects
  {
    const Eigen::MatrixXd draws = empirical(
        [&]() -> Eigen::RowVector2d {
          sampler.step_xi(rng);
          return {sampler.state().xi(0), sampler.state().xi(1)};
        },
        2);
    const Eigen::MatrixXd gf = subset_rows(frozen.g, field);
    const Eigen::MatrixXd wf = subset_rows(design_matrix(ds, Variant::B), field);
    const Eigen::VectorXd d = subset(frozen.H, field) - wf * frozen.beta;
    const Eigen::MatrixXd v_prec =
        gf.transpose() * sigma_h_inv * gf +
        Eigen::MatrixXd::Identity(2, 2) / config.priors.xi_var;
    const Eigen::MatrixXd cov = v_prec.inverse();
    const Eigen::VectorXd mean = cov * (gf.transpose() * sigma_h_inv * d);
    for (int j = 0; j < 2; ++j) {
      mc.check_mean("xi" + std::to_string(j), mean_of(draws, j), mean(j),
                    std::sqrt(cov(j, j) / n_draws));
      mc.check_var("xi" + std::to_string(j), var_of(draws, j), cov(j, j),
                   cov(j, j) * std::sqrt(2.0 / (n_draws - 1)));
    }
  }

  record(3, mc.pass,
         "conjugate steps, 1e5 draws each" +
             (mc.detail.empty() ? std::string(" (all within 3 SE)")
                                : ": " + mc.detail));
}

// --- criterion 4: synthetic parameter recovery ---

void criterion_4() {
  const int n_seeds = 20;
  int beta_cover = 0, logphi_cover = 0;
  long h_total = 0, h_cover = 0;

  for (int s = 0; s < n_seeds; ++s) {
    SyntheticSpec spec;
    spec.n = 60;
    spec.p = 6;
    spec.k = 3;
    spec.variant = Variant::B;
    spec.seed = 100 + s;
    spec.beta1 = 0.5;
    spec.phi = 1.5;
    spec.sigma2_h = 0.2;
    const SyntheticResult gen = generate_synthetic(spec);

    ModelConfig model;
    model.variant = Variant::B;
    McmcConfig mcmc;
    mcmc.iterations = 5000;
    mcmc.burn_in = 1500;
    mcmc.chains = 1;
    mcmc.seed = 9000 + s;
    const PosteriorSamples samples = run_chains(gen.dataset, model, mcmc);

    const SummaryRow beta = summarize_draws("b", samples.pooled_column("beta[1]"));
    if (beta.q025 <= 0.5 && 0.5 <= beta.q975) ++beta_cover;

    const Eigen::VectorXd phi = samples.pooled_column("phi");
    const SummaryRow logphi =
        summarize_draws("p", phi.array().log().matrix());
    if (logphi.q025 <= std::log(1.5) && std::log(1.5) <= logphi.q975)
      ++logphi_cover;

    const Eigen::MatrixXd h = samples.pooled_block("H");
    for (int i = 0; i < 60; ++i) {
      const SummaryRow hi = summarize_draws("h", h.col(i));
      ++h_total;
      if (hi.q025 <= gen.truth.H(i) && gen.truth.H(i) <= hi.q975) ++h_cover;
    }
  }

  const double h_frac = static_cast<double>(h_cover) / h_total;
  // 95% nominal with 20 trials: >= 16 covers is within binomial noise
  const bool pass = beta_cover >= 16 && logphi_cover >= 16 && h_frac >= 0.90;
  record(4, pass,
         "recovery over 20 seeds: beta1 " + std::to_string(beta_cover) +
             "/20, log phi " + std::to_string(logphi_cover) +
             "/20, H coverage " + fmt(h_frac));
}

// --- criterion 5: cut-the-feedback determinism ---

void criterion_5() {
  SyntheticSpec spec;
  spec.n = 15;
  spec.p = 3;
  spec.k = 2;
  spec.variant = Variant::B;
  spec.seed = 7;
  spec.priors = make_desk_config(Variant::B, 3).priors;
  const SyntheticResult gen = generate_synthetic(spec);
  Dataset other = gen.dataset;
  other.Y.array() = -other.Y.array();  // same T and X, different outcomes

  ModelConfig model = make_desk_config(Variant::B, 3);
  McmcConfig mcmc;
  mcmc.iterations = 1500;
  mcmc.burn_in = 500;
  mcmc.chains = 1;
  mcmc.seed = 42;

  const PosteriorSamples a = run_chains(gen.dataset, model, mcmc);
  const PosteriorSamples b = run_chains(other, model, mcmc);
  const double gd =
      (a.pooled_block("gamma") - b.pooled_block("gamma")).cwiseAbs().maxCoeff();
  const double hd =
      (a.pooled_block("H") - b.pooled_block("H")).cwiseAbs().maxCoeff();
  const bool pass = gd == 0.0 && hd > 0.0;
  record(5, pass,
         "gamma draw sequences bit-identical across Y change (max diff " +
             fmt(gd) + "), outcome blocks differ (" + fmt(hd) + ")");
}

// --- criterion 6: deterministic reproducibility via the CLI ---

void criterion_6() {
  const fs::path dir =
      fs::temp_directory_path() / ("lhfi_acc6_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  bool pass = true;
  std::string detail;

  SyntheticSpec spec;
  spec.n = 12;
  spec.p = 3;
  spec.k = 2;
  spec.variant = Variant::B;
  spec.seed = 3;
  spec.priors = make_desk_config(Variant::B, 3).priors;
  generate_synthetic(spec).dataset.save((dir / "ds.json").string());
  {
    std::ofstream m(dir / "model.json");
    m << make_desk_config(Variant::B, 3).to_json();
    McmcConfig mc;
    mc.iterations = 600;
    mc.burn_in = 200;
    mc.chains = 2;
    mc.seed = 5;
    mc.checkpoint_every = 100;
    std::ofstream mm(dir / "mcmc.json");
    mm << mc.to_json();
  }
  const std::string base = "fit --dataset " + (dir / "ds.json").string() +
                           " --model-config " + (dir / "model.json").string() +
                           " --mcmc-config " + (dir / "mcmc.json").string();
  pass = pass && run_cli(base + " --out " + (dir / "r1").string()) == 0;
  pass = pass && run_cli(base + " --out " + (dir / "r2").string()) == 0;
  pass = pass && run_cli(base + " --out " + (dir / "r3").string() +
                         " --stop-after 380") == 0;
  pass = pass && run_cli(base + " --out " + (dir / "r3").string() + " --resume") == 0;

  for (const char* block :
       {"H", "a", "Sigma_Y", "beta", "sigma2_H", "phi", "xi", "gamma"}) {
    for (int c = 0; c < 2; ++c) {
      const std::string rel =
          "chain_" + std::to_string(c) + "/" + block + ".bin";
      const std::string b1 = slurp(dir / "r1" / rel);
      if (b1.empty() || b1 != slurp(dir / "r2" / rel)) {
        pass = false;
        detail += rel + " differs between identical runs; ";
      }
      if (b1 != slurp(dir / "r3" / rel)) {
        pass = false;
        detail += rel + " differs after checkpoint resume; ";
      }
    }
  }
  fs::remove_all(dir);
  record(6, pass,
         detail.empty() ? "repeat fits and checkpoint-resume byte-identical"
                        : detail);
}

// --- criterion 7: analytic kernel checks ---

void criterion_7() {
  bool pass = true;
  std::string detail;
  auto expect = [&](bool ok, const std::string& what) {
    pass = pass && ok;
    if (!ok) detail += what + " FAILED; ";
  };
  expect(spatial_correlation(0.0, 3.1) == 1.0, "rho(0)=1");
  expect(std::abs(spatial_correlation(2.6, 2.6) - std::exp(-1.0)) < 1e-12,
         "rho(phi,phi)=1/e");
  // quarter circumference pi * 6.371 / 2 = 10.00754 Mm (10.0077 in looser
  // rounding)
  expect(std::abs(great_circle_distance_mm(0, 0, 0, 90) - M_PI * 6.371 / 2) <
             1e-4,
         "quarter circumference");
  {
    Eigen::MatrixXd x(1, 1);
    x << 0.0;
    expect(propensity_scores(x, Eigen::VectorXd::Ones(1))(0) == 0.5,
           "expit(0)=0.5");
  }
  {
    const auto s = standardize({1, 2, 3});
    expect(std::abs(s[0] + 1) < 1e-12 && std::abs(s[1]) < 1e-12 &&
               std::abs(s[2] - 1) < 1e-12,
           "standardize([1,2,3])");
  }
  record(7, pass, detail.empty() ? "analytic kernel identities hold" : detail);
}

// --- criterion 8: report shape against the JSON schemas ---

bool check_schema(const json& value, const json& schema, std::string& err);

bool check_type(const json& value, const std::string& type) {
  if (type == "object") return value.is_object();
  if (type == "array") return value.is_array();
  if (type == "string") return value.is_string();
  if (type == "number") return value.is_number();
  if (type == "integer") return value.is_number_integer();
  if (type == "boolean") return value.is_boolean();
  return false;
}

bool check_schema(const json& value, const json& schema, std::string& err) {
  if (schema.contains("type") &&
      !check_type(value, schema["type"].get<std::string>())) {
    err = "expected type " + schema["type"].get<std::string>();
    return false;
  }
  if (schema.contains("required")) {
    for (const auto& key : schema["required"]) {
      if (!value.contains(key.get<std::string>())) {
        err = "missing required field " + key.get<std::string>();
        return false;
      }
    }
  }
  if (schema.contains("properties") && value.is_object()) {
    for (const auto& [key, sub] : schema["properties"].items()) {
      if (value.contains(key) && !check_schema(value[key], sub, err)) {
        err = key + ": " + err;
        return false;
      }
    }
  }
  if (schema.contains("items") && value.is_array()) {
    if (schema.contains("minItems") &&
        value.size() < schema["minItems"].get<size_t>()) {
      err = "array below minItems";
      return false;
    }
    for (const auto& item : value) {
      if (!check_schema(item, schema["items"], err)) {
        err = "item: " + err;
        return false;
      }
    }
  }
  return true;
}

void criterion_8() {
  const fs::path dir =
      fs::temp_directory_path() / ("lhfi_acc8_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  bool pass = true;
  std::string detail;

  SyntheticSpec spec;
  spec.n = 15;
  spec.p = 3;
  spec.k = 2;
  spec.variant = Variant::B;
  spec.seed = 31;
  spec.priors = make_desk_config(Variant::B, 3).priors;
  generate_synthetic(spec).dataset.save((dir / "ds.json").string());
  {
    std::ofstream m(dir / "model.json");
    m << make_desk_config(Variant::B, 3).to_json();
    McmcConfig mc;
    mc.iterations = 800;
    mc.burn_in = 300;
    mc.chains = 1;
    mc.seed = 8;
    std::ofstream mm(dir / "mcmc.json");
    mm << mc.to_json();
  }
  pass = pass &&
         run_cli("fit --dataset " + (dir / "ds.json").string() +
                 " --model-config " + (dir / "model.json").string() +
                 " --mcmc-config " + (dir / "mcmc.json").string() + " --out " +
                 (dir / "run").string()) == 0;

  const std::string rep = "report --samples " + (dir / "run").string();
  pass = pass && run_cli(rep + " --what effect --ref 0.03 --out " +
                         (dir / "rep").string()) == 0;
  pass = pass && run_cli(rep + " --what ranking --dataset " +
                         (dir / "ds.json").string() + " --out " +
                         (dir / "rep").string()) == 0;
  pass = pass && run_cli(rep + " --what dominance --out " +
                         (dir / "rep").string()) == 0;
  pass = pass && run_cli(rep + " --what rho-curve --out " +
                         (dir / "rep").string()) == 0;

  const struct {
    const char* report;
    const char* schema;
  } pairs[] = {{"effect.json", "effect.schema.json"},
               {"ranking.json", "ranking.schema.json"},
               {"dominance.json", "dominance.schema.json"},
               {"rho_curve.json", "rho_curve.schema.json"}};
  for (const auto& p : pairs) {
    const json value = json::parse(slurp(dir / "rep" / p.report), nullptr, false);
    const json schema =
        json::parse(slurp(fs::path(LHFI_SCHEMA_DIR) / p.schema), nullptr, false);
    if (value.is_discarded() || schema.is_discarded()) {
      pass = false;
      detail += std::string(p.report) + " unreadable; ";
      continue;
    }
    std::string err;
    if (!check_schema(value, schema, err)) {
      pass = false;
      detail += std::string(p.report) + ": " + err + "; ";
    }
  }

  // the curve must carry the 0.1 / 0.2 thresholds
  {
    const json curve =
        json::parse(slurp(dir / "rep" / "rho_curve.json"), nullptr, false);
    if (!curve.is_discarded()) {
      const auto thr = curve["thresholds"].get<std::vector<double>>();
      if (!(thr.size() == 2 && thr[0] == 0.1 && thr[1] == 0.2)) {
        pass = false;
        detail += "rho-curve thresholds not 0.1/0.2; ";
      }
    }
  }
  fs::remove_all(dir);
  record(8, pass,
         detail.empty() ? "effect/ranking/dominance/rho-curve conform to schema"
                        : detail);
}

// --- criterion 9: performance budget ---

void criterion_9() {
  SyntheticSpec spec;
  spec.n = 125;
  spec.p = 15;
  spec.k = 4;
  spec.variant = Variant::B;
  spec.seed = 4;
  spec.beta1 = 0.5;
  spec.phi = 1.5;
  spec.sigma2_h = 0.2;
  const SyntheticResult gen = generate_synthetic(spec);

  ModelConfig model;
  model.variant = Variant::B;
  McmcConfig mcmc;
  mcmc.iterations = 20000;
  mcmc.burn_in = 4000;
  mcmc.chains = 1;
  mcmc.seed = 77;

  const auto t0 = std::chrono::steady_clock::now();
  const PosteriorSamples samples = run_chains(gen.dataset, model, mcmc);
  const double dt = seconds_since(t0);

  const double ess = effective_sample_size(samples.pooled_column("beta[1]"));
  const bool pass = dt < 1800.0 && ess > 500.0;
  record(9, pass,
         "N=125 P=15 K=4, 20000 sweeps, 1 core: " + fmt(dt) +
             " s (budget 1800), ESS(beta1) = " + fmt(ess));
}

}  // namespace

int main() {
  criterion_7();  // cheap sanity first
  criterion_3();
  criterion_2();
  criterion_5();
  criterion_6();
  criterion_8();
  criterion_4();
  criterion_9();
  criterion_1();

  int failures = 0;
  for (const auto& o : g_outcomes)
    if (!o.pass) ++failures;
  std::cout << (failures == 0 ? "ACCEPTANCE: all criteria passed"
                              : "ACCEPTANCE: " + std::to_string(failures) +
                                    " criterion(s) failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
