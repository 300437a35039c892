#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace lhfi {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Seedable, stream-splittable generator (xoshiro256++ seeded through
/// splitmix64). Identical (seed, stream_id) reproduce the same draw
/// sequence; distinct stream_ids give statistically independent streams.
/// Single-owner: never share one stream across concurrent tasks.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64();

  // Uniform on (0,1]; safe under log().
  double uniform();

  // Standard normal via Box-Muller, two uniforms per draw, no cached spare
  // (keeps the stream state a plain 4-word record for checkpointing).
  double normal();

  // Gamma(shape, rate 1), Marsaglia-Tsang squeeze; shape < 1 via boost.
  double gamma(double shape);

  double chi_squared(double dof) { return 2.0 * gamma(0.5 * dof); }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::array<std::uint64_t, 4> state() const { return s_; }
  void restore(const std::array<std::uint64_t, 4>& s) { s_ = s; }

 private:
  std::array<std::uint64_t, 4> s_{};
  std::uint64_t seed_ = 0;
  std::uint64_t stream_id_ = 0;
};

/// Symmetric positive definite matrix with its lower Cholesky factor
/// cached at construction. Construction throws if the input is not
/// symmetric (1e-12 relative) or the factorization fails.
class SpdMatrix {
 public:
  SpdMatrix() = default;
  explicit SpdMatrix(Eigen::MatrixXd m);

  static SpdMatrix identity(int dim);

  int dim() const { return static_cast<int>(mat_.rows()); }
  const Eigen::MatrixXd& matrix() const { return mat_; }
  const Eigen::MatrixXd& chol_lower() const { return llt_; }

  // log det via 2 * sum(log diag(L)).
  double log_det() const;

  // Solve M x = b through the cached factor; never forms M^{-1}.
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const;

  // x' M^{-1} x as squared norm of L^{-1} x.
  double inv_quad_form(const Eigen::VectorXd& x) const;

 private:
  Eigen::MatrixXd mat_;
  Eigen::MatrixXd llt_;  // lower factor
};

double normal_logpdf(double x, double mean, double var);

// MVN draw mean + L z.
Eigen::VectorXd mvn_sample(const Eigen::VectorXd& mean, const SpdMatrix& cov,
                           RngStream& rng);

// Draw from N(P^{-1} b, P^{-1}) given precision P and linear term b,
// via the precision Cholesky system (no explicit inversion).
Eigen::VectorXd mvn_sample_precision(const SpdMatrix& precision,
                                     const Eigen::VectorXd& linear,
                                     RngStream& rng);

// -0.5 [d log 2pi + log det cov + (x-m)' cov^{-1} (x-m)], Cholesky solve.
double mvn_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                  const SpdMatrix& cov);

// Inverse-Wishart(dof, scale): draw W ~ Wishart(dof, scale^{-1}) by the
// Bartlett construction and return W^{-1}, assembled from triangular
// solves only. Requires dof > dim - 1.
SpdMatrix inv_wishart_sample(double dof, const SpdMatrix& scale,
                             RngStream& rng);

// Density of Inverse-Wishart(dof, scale) at w, full normalization.
double inv_wishart_logpdf(const SpdMatrix& w, double dof,
                          const SpdMatrix& scale);

// Inverse-gamma with shape/rate parameterization: x = rate / Gamma(shape).
double inv_gamma_sample(double shape, double rate, RngStream& rng);
double inv_gamma_logpdf(double x, double shape, double rate);

// Density of exp(N(mu, sigma^2)) at x > 0, log scale.
double lognormal_logpdf(double x, double mu, double sigma);

// log Gamma_p(a), multivariate gamma.
double lgamma_multivariate(int p, double a);

}  // namespace lhfi
