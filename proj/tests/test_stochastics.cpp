#include <doctest.h>

#include <cmath>

#include "lhfi/stochastics.hpp"

using namespace lhfi;

namespace {

// Dense-inverse MVN log density, the independent route for checking the
// Cholesky-solve implementation.
double mvn_logpdf_dense(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                        const Eigen::MatrixXd& cov) {
  const Eigen::MatrixXd inv = cov.inverse();
  const Eigen::VectorXd d = x - mean;
  return -0.5 * (x.size() * std::log(2 * M_PI) + std::log(cov.determinant()) +
                 d.dot(inv * d));
}

Eigen::MatrixXd random_spd(int dim, RngStream& rng) {
  Eigen::MatrixXd a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = rng.normal();
  return a * a.transpose() + 0.5 * dim * Eigen::MatrixXd::Identity(dim, dim);
}

}  // namespace

TEST_CASE("rng streams are reproducible and distinct") {
  RngStream a(123, 7), b(123, 7), c(123, 8);
  bool same = true, differ = false;
  for (int i = 0; i < 1000; ++i) {
    const double va = a.normal();
    same = same && va == b.normal();
    differ = differ || va != c.normal();
  }
  CHECK(same);
  CHECK(differ);
}

TEST_CASE("rng gamma moments") {
  RngStream rng(5, 1);
  const double shape = 2.7;
  const int n = 200000;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gamma(shape);
    sum += g;
    sum2 += g * g;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(mean == doctest::Approx(shape).epsilon(0.02));
  CHECK(var == doctest::Approx(shape).epsilon(0.05));
}

TEST_CASE("spd matrix basics") {
  RngStream rng(1, 1);
  const Eigen::MatrixXd m = random_spd(4, rng);
  const SpdMatrix spd(m);
  const Eigen::MatrixXd recon =
      spd.chol_lower() * spd.chol_lower().transpose();
  CHECK((recon - m).cwiseAbs().maxCoeff() < 1e-10 * m.cwiseAbs().maxCoeff());
  CHECK(spd.log_det() == doctest::Approx(std::log(m.determinant())).epsilon(1e-10));

  Eigen::MatrixXd asym = m;
  asym(0, 1) += 1e-3;
  CHECK_THROWS_AS((void)SpdMatrix(asym), Error);

  Eigen::MatrixXd indef = Eigen::MatrixXd::Zero(2, 2);
  indef(0, 0) = 1.0;  // diag(1, 0) is singular
  CHECK_THROWS_AS((void)SpdMatrix(indef), Error);
}

TEST_CASE("mvn sample mean within Monte Carlo bound") {
  RngStream rng(42, 0);
  const SpdMatrix cov = SpdMatrix::identity(2);
  const Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
  const int n = 100000;
  Eigen::Vector2d acc = Eigen::Vector2d::Zero();
  for (int i = 0; i < n; ++i) acc += mvn_sample(mean, cov, rng);
  acc /= n;
  // 4 sigma / sqrt(n) ~ 0.0126 < 0.02
  CHECK(std::abs(acc(0)) < 0.02);
  CHECK(std::abs(acc(1)) < 0.02);
}

TEST_CASE("mvn sample determinism under fixed stream") {
  const SpdMatrix cov = SpdMatrix::identity(3);
  const Eigen::VectorXd mean = Eigen::VectorXd::Ones(3);
  RngStream r1(9, 4), r2(9, 4);
  const Eigen::VectorXd d1 = mvn_sample(mean, cov, r1);
  const Eigen::VectorXd d2 = mvn_sample(mean, cov, r2);
  CHECK((d1 - d2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mvn logpdf scalar reference values") {
  Eigen::VectorXd x(1), m(1);
  x << 0;
  m << 0;
  CHECK(mvn_logpdf(x, m, SpdMatrix::identity(1)) ==
        doctest::Approx(-0.9189385332046727).epsilon(1e-9));
  x << 1;
  CHECK(mvn_logpdf(x, m, SpdMatrix::identity(1)) ==
        doctest::Approx(-1.4189385332046727).epsilon(1e-9));
}

TEST_CASE("mvn logpdf matches dense-inverse oracle") {
  RngStream rng(3, 3);
  const Eigen::MatrixXd cov = random_spd(4, rng);
  Eigen::VectorXd x(4), m(4);
  for (int i = 0; i < 4; ++i) {
    x(i) = rng.normal();
    m(i) = rng.normal();
  }
  CHECK(std::abs(mvn_logpdf(x, m, SpdMatrix(cov)) -
                 mvn_logpdf_dense(x, m, cov)) < 1e-10);
}

TEST_CASE("mvn logpdf invariant under coordinate permutation") {
  RngStream rng(11, 2);
  const int d = 5;
  const Eigen::MatrixXd cov = random_spd(d, rng);
  Eigen::VectorXd x(d), m(d);
  for (int i = 0; i < d; ++i) {
    x(i) = rng.normal();
    m(i) = rng.normal();
  }
  const double base = mvn_logpdf(x, m, SpdMatrix(cov));
  std::vector<int> perm{3, 0, 4, 1, 2};
  Eigen::VectorXd xp(d), mp(d);
  Eigen::MatrixXd cp(d, d);
  for (int i = 0; i < d; ++i) {
    xp(i) = x(perm[i]);
    mp(i) = m(perm[i]);
    for (int j = 0; j < d; ++j) cp(i, j) = cov(perm[i], perm[j]);
  }
  CHECK(std::abs(mvn_logpdf(xp, mp, SpdMatrix(cp)) - base) < 1e-10);
}

TEST_CASE("precision-parameterized sampling matches covariance route") {
  RngStream rng(8, 8);
  const Eigen::MatrixXd prec = random_spd(3, rng);
  const Eigen::VectorXd b = Eigen::VectorXd::Ones(3);
  const int n = 100000;
  Eigen::Vector3d acc = Eigen::Vector3d::Zero();
  Eigen::Matrix3d acc2 = Eigen::Matrix3d::Zero();
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd d = mvn_sample_precision(SpdMatrix(prec), b, rng);
    acc += d;
    acc2 += d * d.transpose();
  }
  acc /= n;
  acc2 /= n;
  const Eigen::MatrixXd cov_target = prec.inverse();
  const Eigen::VectorXd mean_target = cov_target * b;
  const Eigen::MatrixXd cov_emp = acc2 - acc * acc.transpose();
  CHECK((acc - mean_target).cwiseAbs().maxCoeff() < 0.02);
  CHECK((cov_emp - cov_target).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("inverse wishart mean identity and support") {
  RngStream rng(21, 0);
  const double dof = 10;
  const SpdMatrix scale = SpdMatrix::identity(2);
  const int n = 100000;
  Eigen::Matrix2d acc = Eigen::Matrix2d::Zero();
  for (int i = 0; i < n; ++i)
    acc += inv_wishart_sample(dof, scale, rng).matrix();
  acc /= n;
  // mean = scale / (dof - dim - 1) = I / 7
  CHECK(acc(0, 0) == doctest::Approx(1.0 / 7).epsilon(0.05));
  CHECK(acc(1, 1) == doctest::Approx(1.0 / 7).epsilon(0.05));
  CHECK(std::abs(acc(0, 1)) < 0.01);

  CHECK_THROWS_AS(inv_wishart_sample(1.0, scale, rng), Error);  // dof = dim - 1

  for (int i = 0; i < 1000; ++i) {
    const SpdMatrix w = inv_wishart_sample(4.5, scale, rng);
    CHECK(w.chol_lower()(0, 0) > 0);  // construction succeeded => SPD
  }
}

TEST_CASE("inverse wishart against scaled identity prior") {
  // For scale = c*I the diagonal marginal is IG((dof-p+1)/2, c/2).
  RngStream rng(13, 5);
  const double c = 3.0;
  const double dof = 9;
  const int p = 3;
  const SpdMatrix scale(c * Eigen::MatrixXd::Identity(p, p));
  const int n = 50000;
  double acc = 0;
  for (int i = 0; i < n; ++i) acc += inv_wishart_sample(dof, scale, rng).matrix()(1, 1);
  const double shape = 0.5 * (dof - p + 1);
  const double target = 0.5 * c / (shape - 1);
  CHECK(acc / n == doctest::Approx(target).epsilon(0.05));
}

TEST_CASE("inverse gamma sampler and density") {
  RngStream rng(2, 9);
  const int n = 100000;
  double acc = 0;
  bool positive = true;
  for (int i = 0; i < n; ++i) {
    const double x = inv_gamma_sample(3.0, 2.0, rng);
    positive = positive && x > 0;
    acc += x;
  }
  CHECK(positive);
  CHECK(acc / n == doctest::Approx(1.0).epsilon(0.03));  // rate/(shape-1)

  CHECK_THROWS_AS(inv_gamma_sample(-1.0, 1.0, rng), Error);

  RngStream r1(4, 4), r2(4, 4);
  CHECK(inv_gamma_sample(2.0, 1.0, r1) == inv_gamma_sample(2.0, 1.0, r2));

  // density normalizes on a grid
  const double shape = 2.5, rate = 1.5;
  double integral = 0;
  const int grid = 400000;
  const double hi = 60.0, step = hi / grid;
  for (int i = 1; i <= grid; ++i)
    integral += std::exp(inv_gamma_logpdf(i * step, shape, rate)) * step;
  CHECK(integral == doctest::Approx(1.0).epsilon(2e-3));
}

TEST_CASE("lognormal density") {
  const double mu = 0.4, sigma = 2.0;
  CHECK(lognormal_logpdf(std::exp(mu), mu, sigma) ==
        doctest::Approx(-mu - std::log(sigma) - 0.5 * std::log(2 * M_PI))
            .epsilon(1e-12));
  CHECK_THROWS_AS(lognormal_logpdf(0.0, mu, sigma), Error);
  CHECK_THROWS_AS(lognormal_logpdf(-1.0, mu, sigma), Error);

  // Trapezoid quadrature over (0, 50] recovers the true mass of that
  // interval, Phi((log 50 - mu)/sigma).
  const int grid = 2000000;
  const double hi = 50.0, step = hi / grid;
  double integral = 0;
  double prev = 0;  // density -> 0 as x -> 0+
  for (int i = 1; i <= grid; ++i) {
    const double cur = std::exp(lognormal_logpdf(i * step, mu, sigma));
    integral += 0.5 * (prev + cur) * step;
    prev = cur;
  }
  const double truth = 0.5 * std::erfc(-(std::log(hi) - mu) / (sigma * std::sqrt(2.0)));
  CHECK(integral == doctest::Approx(truth).epsilon(1e-3));

  // And the full line integrates to 1 (wide log-spaced extension).
  double tail = integral;
  double x = hi;
  prev = std::exp(lognormal_logpdf(hi, mu, sigma));
  while (x < std::exp(mu + 9 * sigma)) {
    const double nx = x * 1.001;
    const double cur = std::exp(lognormal_logpdf(nx, mu, sigma));
    tail += 0.5 * (prev + cur) * (nx - x);
    prev = cur;
    x = nx;
  }
  CHECK(tail == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("cholesky log det equals twice the log-diagonal sum") {
  RngStream rng(6, 6);
  for (int trial = 0; trial < 20; ++trial) {
    const SpdMatrix m(random_spd(5, rng));
    double s = 0;
    for (int i = 0; i < 5; ++i) s += 2 * std::log(m.chol_lower()(i, i));
    CHECK(std::abs(m.log_det() - s) < 1e-10);
  }
}
