#include "lhfi/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lhfi {

double quantile_type7(std::vector<double> values, double p) {
  if (values.empty()) throw Error("quantile: empty input");
  if (p < 0 || p > 1) throw Error("quantile: p outside [0,1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

const SummaryRow& SummaryReport::row(const std::string& name) const {
  for (const auto& r : rows)
    if (r.name == name) return r;
  throw Error("summary has no row: " + name);
}

SummaryRow summarize_draws(const std::string& name,
                           const Eigen::VectorXd& draws) {
  std::vector<double> v(draws.data(), draws.data() + draws.size());
  SummaryRow row;
  row.name = name;
  row.mean = draws.mean();
  row.median = quantile_type7(v, 0.5);
  row.q025 = quantile_type7(v, 0.025);
  row.q975 = quantile_type7(v, 0.975);
  return row;
}

SummaryReport summarize(const PosteriorSamples& samples,
                        const std::vector<std::string>& names) {
  if (samples.total_draws() < 100)
    throw Error("summarize: need at least 100 draws");
  SummaryReport report;
  for (const auto& name : names)
    report.rows.push_back(summarize_draws(name, samples.pooled_column(name)));
  return report;
}

double dominance_probability(const Eigen::VectorXd& draws_i,
                             const Eigen::VectorXd& draws_j) {
  if (draws_i.size() != draws_j.size())
    throw Error("dominance_probability: length mismatch");
  long wins = 0;
  for (Eigen::Index t = 0; t < draws_i.size(); ++t)
    if (draws_i(t) > draws_j(t)) ++wins;
  return static_cast<double>(wins) / static_cast<double>(draws_i.size());
}

TreatmentEffectReport treatment_effect_report(const PosteriorSamples& samples,
                                              double ref) {
  const Eigen::VectorXd b1 = samples.pooled_column("beta[1]");
  TreatmentEffectReport r;
  const SummaryRow s = summarize_draws("beta[1]", b1);
  r.median = s.median;
  r.q025 = s.q025;
  r.q975 = s.q975;
  r.p_positive = (b1.array() > 0.0).cast<double>().mean();
  r.p_greater_ref = (b1.array() > ref).cast<double>().mean();
  r.ref = ref;
  r.causal = samples.variant == Variant::B;
  return r;
}

std::vector<CorrelationCurveRow> correlation_curve(
    const Eigen::VectorXd& phi_draws, const Eigen::VectorXd& d_grid,
    const std::vector<double>& thresholds) {
  if (phi_draws.size() == 0) throw Error("correlation_curve: no phi draws");
  std::vector<CorrelationCurveRow> out;
  for (Eigen::Index g = 0; g < d_grid.size(); ++g) {
    const double d = d_grid(g);
    if (d < 0) throw Error("correlation_curve: negative distance");
    Eigen::VectorXd rho(phi_draws.size());
    for (Eigen::Index t = 0; t < phi_draws.size(); ++t)
      rho(t) = std::exp(-d / phi_draws(t));
    CorrelationCurveRow row;
    row.d = d;
    const SummaryRow s = summarize_draws("rho", rho);
    row.mean = s.mean;
    row.median = s.median;
    row.q025 = s.q025;
    row.q975 = s.q975;
    for (double thr : thresholds)
      row.p_over.push_back((rho.array() > thr).cast<double>().mean());
    out.push_back(std::move(row));
  }
  return out;
}

Eigen::VectorXd h_residuals(const PosteriorSamples& samples,
                            const Dataset& ds) {
  if (samples.variant != Variant::A || samples.spatial)
    throw Error("h_residuals: defined for the iid base fit (variant A, spatial off)");
  const Eigen::MatrixXd h = samples.pooled_block("H");
  const Eigen::MatrixXd beta = samples.pooled_block("beta");
  Eigen::VectorXd h_med(h.cols()), beta_med(beta.cols());
  for (Eigen::Index j = 0; j < h.cols(); ++j)
    h_med(j) = summarize_draws("h", h.col(j)).median;
  for (Eigen::Index j = 0; j < beta.cols(); ++j)
    beta_med(j) = summarize_draws("b", beta.col(j)).median;
  const Eigen::MatrixXd w = design_matrix(ds, Variant::A);
  if (w.cols() != beta_med.size())
    throw Error("h_residuals: dataset does not match the fitted design");
  return h_med - w * beta_med;
}

double effective_sample_size(const Eigen::VectorXd& chain) {
  const auto n = chain.size();
  if (n < 4) throw Error("effective_sample_size: chain too short");
  const double mean = chain.mean();
  const Eigen::VectorXd c = chain.array() - mean;
  const double gamma0 = c.squaredNorm() / static_cast<double>(n);
  if (gamma0 <= 0) return static_cast<double>(n);  // constant chain

  auto gamma_at = [&](Eigen::Index k) {
    double s = 0;
    for (Eigen::Index t = 0; t + k < n; ++t) s += c(t) * c(t + k);
    return s / static_cast<double>(n);
  };

  // Initial monotone sequence: asym = -gamma_0 + 2 sum_m Gamma_m with
  // Gamma_m = gamma_{2m} + gamma_{2m+1}, truncated at the first
  // nonpositive pair and forced nonincreasing.
  double asym = -gamma0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (Eigen::Index m = 0;; ++m) {
    const Eigen::Index k1 = 2 * m, k2 = 2 * m + 1;
    if (k1 >= n) break;
    double pair = gamma_at(k1) + (k2 < n ? gamma_at(k2) : 0.0);
    if (pair <= 0) break;
    pair = std::min(pair, prev_pair);
    asym += 2.0 * pair;
    prev_pair = pair;
  }
  if (asym <= 0) return static_cast<double>(n);
  const double ess = static_cast<double>(n) * gamma0 / asym;
  return std::min(ess, static_cast<double>(n));
}

double mcmc_se(const Eigen::VectorXd& chain) {
  const double n = static_cast<double>(chain.size());
  const double mean = chain.mean();
  const double var = (chain.array() - mean).square().sum() / (n - 1.0);
  const double ess = effective_sample_size(chain);
  return std::sqrt(var / std::max(ess, 1.0));
}

namespace {

// Beasley-Springer-Moro inverse normal, adequate for rank transforms.
double inv_normal_cdf(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double cc[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                              -2.400758277161838e+00, -2.549732539343734e+00,
                              4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  if (p <= 0 || p >= 1) throw Error("inv_normal_cdf: p outside (0,1)");
  const double plow = 0.02425;
  if (p < plow) {
    const double q = std::sqrt(-2 * std::log(p));
    return (((((cc[0] * q + cc[1]) * q + cc[2]) * q + cc[3]) * q + cc[4]) * q + cc[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  if (p > 1 - plow) return -inv_normal_cdf(1 - p);
  const double q = p - 0.5, r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

std::vector<Eigen::VectorXd> rank_normalized(
    const std::vector<Eigen::VectorXd>& chains) {
  long total = 0;
  for (const auto& c : chains) total += c.size();
  std::vector<std::pair<double, std::pair<int, int>>> pooled;
  pooled.reserve(static_cast<size_t>(total));
  for (int c = 0; c < static_cast<int>(chains.size()); ++c)
    for (Eigen::Index t = 0; t < chains[c].size(); ++t)
      pooled.push_back({chains[c](t), {c, static_cast<int>(t)}});
  std::sort(pooled.begin(), pooled.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  std::vector<Eigen::VectorXd> out;
  for (const auto& c : chains) out.push_back(Eigen::VectorXd(c.size()));
  for (size_t r = 0; r < pooled.size(); ++r) {
    const double z = inv_normal_cdf((static_cast<double>(r) + 1.0 - 0.375) /
                                    (static_cast<double>(total) + 0.25));
    out[pooled[r].second.first](pooled[r].second.second) = z;
  }
  return out;
}

}  // namespace

double split_rhat(const std::vector<Eigen::VectorXd>& chains,
                  bool rank_normalize) {
  if (chains.empty()) throw Error("split_rhat: no chains");
  const std::vector<Eigen::VectorXd>& input =
      rank_normalize ? rank_normalized(chains) : chains;
  std::vector<Eigen::VectorXd> splits;
  for (const auto& c : input) {
    const Eigen::Index half = c.size() / 2;
    if (half < 2) throw Error("split_rhat: chains too short to split");
    splits.push_back(c.head(half));
    splits.push_back(c.tail(half));
  }
  const double m = static_cast<double>(splits.size());
  const double n = static_cast<double>(splits.front().size());
  Eigen::VectorXd means(splits.size()), vars(splits.size());
  for (size_t j = 0; j < splits.size(); ++j) {
    means(static_cast<Eigen::Index>(j)) = splits[j].mean();
    vars(static_cast<Eigen::Index>(j)) =
        (splits[j].array() - means(static_cast<Eigen::Index>(j))).square().sum() /
        (n - 1.0);
  }
  const double grand = means.mean();
  const double b = n * (means.array() - grand).square().sum() / (m - 1.0);
  const double w = vars.mean();
  if (w <= 0) return 1.0;  // constant chains
  const double vhat = (n - 1.0) / n * w + b / n;
  return std::sqrt(vhat / w);
}

double geweke_z(const Eigen::VectorXd& chain) {
  const auto n = chain.size();
  if (n < 100) throw Error("geweke_z: chain too short");
  const Eigen::VectorXd head = chain.head(n / 10);
  const Eigen::VectorXd tail = chain.tail(n / 2);
  const double se1 = mcmc_se(head);
  const double se2 = mcmc_se(tail);
  const double denom = std::sqrt(se1 * se1 + se2 * se2);
  if (denom == 0) return 0.0;
  return (head.mean() - tail.mean()) / denom;
}

std::vector<DiagnosticsRow> diagnostics(const PosteriorSamples& samples,
                                        const std::vector<std::string>& names) {
  if (samples.total_draws() < 200)
    throw Error("diagnostics: need at least 200 draws");
  std::vector<DiagnosticsRow> out;
  for (const auto& name : names) {
    DiagnosticsRow row;
    row.name = name;
    std::vector<Eigen::VectorXd> chains;
    double ess = 0;
    for (int c = 0; c < static_cast<int>(samples.chains.size()); ++c) {
      chains.push_back(samples.chain_column(c, name));
      ess += effective_sample_size(chains.back());
    }
    row.ess = std::min(ess, static_cast<double>(samples.total_draws()));
    row.split_rhat = split_rhat(chains);
    row.geweke_z = geweke_z(samples.pooled_column(name));
    out.push_back(row);
  }
  return out;
}

std::vector<RankRow> rank_report(const PosteriorSamples& samples,
                                 const Dataset& ds) {
  const Eigen::MatrixXd h = samples.pooled_block("H");
  if (h.cols() != ds.n()) throw Error("rank_report: dataset does not match samples");
  std::vector<RankRow> rows;
  for (int i = 0; i < ds.n(); ++i) {
    const SummaryRow s = summarize_draws("h", h.col(i));
    RankRow r;
    r.id = ds.countries[i].id;
    r.name = ds.countries[i].name;
    r.income_group = ds.countries[i].income_group;
    r.median = s.median;
    r.q025 = s.q025;
    r.q975 = s.q975;
    rows.push_back(r);
  }
  std::sort(rows.begin(), rows.end(), [](const RankRow& x, const RankRow& y) {
    if (x.median != y.median) return x.median > y.median;
    return x.id < y.id;
  });
  for (size_t i = 0; i < rows.size(); ++i) rows[i].rank = static_cast<int>(i) + 1;
  return rows;
}

Eigen::MatrixXd dominance_matrix(const PosteriorSamples& samples) {
  const Eigen::MatrixXd h = samples.pooled_block("H");
  const auto n = h.cols();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j) out(i, j) = dominance_probability(h.col(i), h.col(j));
  return out;
}

}  // namespace lhfi
