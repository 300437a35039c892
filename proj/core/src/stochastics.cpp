#include "lhfi/stochastics.hpp"

#include <cmath>
#include <limits>

namespace lhfi {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

inline std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  // Decorrelate streams by folding the stream id into the splitmix seed.
  std::uint64_t x = seed ^ (0xD1B54A32D192ED03ULL * (stream_id + 1));
  for (auto& w : s_) w = splitmix64(x);
  if (s_[0] == 0 && s_[1] == 0 && s_[2] == 0 && s_[3] == 0) s_[0] = 1;
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double RngStream::uniform() {
  // 53-bit mantissa, shifted into (0,1].
  return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

double RngStream::normal() {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

double RngStream::gamma(double shape) {
  if (!(shape > 0.0)) throw Error("gamma: shape must be positive");
  if (shape < 1.0) {
    const double u = uniform();
    return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

SpdMatrix::SpdMatrix(Eigen::MatrixXd m) : mat_(std::move(m)) {
  if (mat_.rows() != mat_.cols()) throw Error("SpdMatrix: not square");
  const double scale = std::max(1.0, mat_.cwiseAbs().maxCoeff());
  const double asym = (mat_ - mat_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale) throw Error("SpdMatrix: not symmetric");
  // Symmetrize exactly so the factor reproduces the stored entries.
  mat_ = 0.5 * (mat_ + mat_.transpose()).eval();
  Eigen::LLT<Eigen::MatrixXd> llt(mat_);
  // LLT accepts exact-zero pivots on singular inputs; require strictly
  // positive pivots so semidefinite matrices are rejected too.
  if (llt.info() != Eigen::Success ||
      Eigen::MatrixXd(llt.matrixL()).diagonal().minCoeff() <=
          std::sqrt(1e-14 * scale))
    throw Error("SpdMatrix: Cholesky failed (matrix not positive definite)");
  llt_ = llt.matrixL();
}

SpdMatrix SpdMatrix::identity(int dim) {
  return SpdMatrix(Eigen::MatrixXd::Identity(dim, dim));
}

double SpdMatrix::log_det() const {
  return 2.0 * llt_.diagonal().array().log().sum();
}

Eigen::VectorXd SpdMatrix::solve(const Eigen::VectorXd& b) const {
  Eigen::VectorXd y = llt_.triangularView<Eigen::Lower>().solve(b);
  return llt_.transpose().triangularView<Eigen::Upper>().solve(y);
}

Eigen::MatrixXd SpdMatrix::solve(const Eigen::MatrixXd& b) const {
  Eigen::MatrixXd y = llt_.triangularView<Eigen::Lower>().solve(b);
  return llt_.transpose().triangularView<Eigen::Upper>().solve(y);
}

double SpdMatrix::inv_quad_form(const Eigen::VectorXd& x) const {
  return llt_.triangularView<Eigen::Lower>().solve(x).squaredNorm();
}

double normal_logpdf(double x, double mean, double var) {
  if (!(var > 0.0)) throw Error("normal_logpdf: variance must be positive");
  const double d = x - mean;
  return -0.5 * (kLog2Pi + std::log(var) + d * d / var);
}

Eigen::VectorXd mvn_sample(const Eigen::VectorXd& mean, const SpdMatrix& cov,
                           RngStream& rng) {
  if (mean.size() != cov.dim()) throw Error("mvn_sample: dimension mismatch");
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return mean + cov.chol_lower().triangularView<Eigen::Lower>() * z;
}

Eigen::VectorXd mvn_sample_precision(const SpdMatrix& precision,
                                     const Eigen::VectorXd& linear,
                                     RngStream& rng) {
  if (linear.size() != precision.dim())
    throw Error("mvn_sample_precision: dimension mismatch");
  // mean = P^{-1} b; draw = mean + L^{-T} z with P = L L'.
  Eigen::VectorXd mean = precision.solve(linear);
  Eigen::VectorXd z(linear.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  Eigen::VectorXd t = precision.chol_lower()
                          .transpose()
                          .triangularView<Eigen::Upper>()
                          .solve(z);
  return mean + t;
}

double mvn_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                  const SpdMatrix& cov) {
  if (x.size() != mean.size() || x.size() != cov.dim())
    throw Error("mvn_logpdf: dimension mismatch");
  const double quad = cov.inv_quad_form(x - mean);
  return -0.5 * (x.size() * kLog2Pi + cov.log_det() + quad);
}

SpdMatrix inv_wishart_sample(double dof, const SpdMatrix& scale,
                             RngStream& rng) {
  const int p = scale.dim();
  if (!(dof > p - 1)) throw Error("inv_wishart_sample: dof must exceed dim-1");
  // Bartlett factor A: lower triangular, A_ii = sqrt(chi2(dof - i)),
  // subdiagonal standard normal (draws row-major for a fixed stream order).
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < i; ++j) a(i, j) = rng.normal();
    a(i, i) = std::sqrt(rng.chi_squared(dof - i));
  }
  // W = C A A' C' with C C' = scale^{-1}; using C = L_s^{-T} gives
  // W^{-1} = M' M where M = A^{-1} L_s', one triangular solve.
  Eigen::MatrixXd m = a.triangularView<Eigen::Lower>().solve(
      scale.chol_lower().transpose().eval());
  return SpdMatrix(m.transpose() * m);
}

double inv_wishart_logpdf(const SpdMatrix& w, double dof,
                          const SpdMatrix& scale) {
  const int p = w.dim();
  if (scale.dim() != p) throw Error("inv_wishart_logpdf: dimension mismatch");
  // tr(S W^{-1}) = || L_w^{-1} L_s ||_F^2.
  Eigen::MatrixXd t = w.chol_lower().triangularView<Eigen::Lower>().solve(
      scale.chol_lower().eval());
  const double trace_term = t.squaredNorm();
  return 0.5 * dof * scale.log_det() - 0.5 * dof * p * std::log(2.0) -
         lgamma_multivariate(p, 0.5 * dof) -
         0.5 * (dof + p + 1) * w.log_det() - 0.5 * trace_term;
}

double inv_gamma_sample(double shape, double rate, RngStream& rng) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw Error("inv_gamma_sample: parameters must be positive");
  return rate / rng.gamma(shape);
}

double inv_gamma_logpdf(double x, double shape, double rate) {
  if (!(x > 0.0)) throw Error("inv_gamma_logpdf: support is x > 0");
  return shape * std::log(rate) - std::lgamma(shape) -
         (shape + 1.0) * std::log(x) - rate / x;
}

double lognormal_logpdf(double x, double mu, double sigma) {
  if (!(x > 0.0)) throw Error("lognormal_logpdf: support is x > 0");
  if (!(sigma > 0.0)) throw Error("lognormal_logpdf: sigma must be positive");
  const double z = (std::log(x) - mu) / sigma;
  return -std::log(x) - std::log(sigma) - 0.5 * kLog2Pi - 0.5 * z * z;
}

double lgamma_multivariate(int p, double a) {
  double s = 0.25 * p * (p - 1) * std::log(M_PI);
  for (int j = 0; j < p; ++j) s += std::lgamma(a - 0.5 * j);
  return s;
}

}  // namespace lhfi
