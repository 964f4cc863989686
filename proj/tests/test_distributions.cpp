#include <doctest.h>

#include <cmath>
#include <vector>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/inverse_gamma.hpp>

#include "oracles.hpp"
#include "rbreg/distributions.hpp"
#include "rbreg/errors.hpp"

using namespace rbreg;

namespace {

constexpr long kDraws = 100000;

template <class F>
std::vector<double> draw(long count, F&& f) {
  std::vector<double> xs(static_cast<std::size_t>(count));
  for (auto& x : xs) x = f();
  return xs;
}

void check_two_moments(const std::vector<double>& xs, double mean, double var, double mu4) {
  const auto m = oracle::moments(xs);
  CHECK(oracle::mean_z(m, mean, var) < 3.0);
  CHECK(oracle::var_z(m, var, mu4) < 3.0);
}

double gamma_mu4(double k, double rate) { return (3 * k * k + 6 * k) / std::pow(rate, 4); }

}  // namespace

TEST_CASE("rng streams are reproducible and distinct") {
  RngStream a(42, 3), b(42, 3), c(42, 4);
  std::vector<double> xa, xb, xc;
  for (int i = 0; i < 100; ++i) {
    xa.push_back(a.normal());
    xb.push_back(b.normal());
    xc.push_back(c.normal());
  }
  CHECK(xa == xb);
  CHECK(xa != xc);

  RngStream d = RngStream(42, 3).derive({1, 2});
  RngStream e = RngStream(42, 3).derive({1, 2});
  RngStream f = RngStream(42, 3).derive({2, 1});
  CHECK(d == e);
  CHECK(d.uniform() == e.uniform());
  CHECK_FALSE(d.stream() == f.stream());

  // Distinct streams are uncorrelated.
  RngStream g(7, 0), h(7, 1);
  double sxy = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sxy += g.normal() * h.normal();
  CHECK(std::abs(sxy / n) < 3.0 / std::sqrt(double(n)));
}

TEST_CASE("rng state snapshot restores the exact sequence") {
  RngStream a(9, 1);
  a.normal();  // leaves a cached second normal behind
  const auto snap = a.save_state();
  std::vector<double> first;
  for (int i = 0; i < 5; ++i) first.push_back(a.normal());
  RngStream b(0, 0);
  b.restore_state(snap);
  for (int i = 0; i < 5; ++i) CHECK(b.normal() == first[static_cast<std::size_t>(i)]);
  CHECK_THROWS_AS(b.restore_state("garbage"), IoError);
}

TEST_CASE("uniform stays in the open unit interval") {
  RngStream r(1, 1);
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("inverse gaussian moments") {
  RngStream r(11, 0);
  SUBCASE("shape 1 mean 1") {
    const auto xs = draw(kDraws, [&] { return dist::sample_inverse_gaussian({1, 1}, r); });
    check_two_moments(xs, 1.0, 1.0, 1.0 * (3 + 15.0));
  }
  SUBCASE("shape 4 mean 2") {
    const auto xs = draw(kDraws, [&] { return dist::sample_inverse_gaussian({4, 2}, r); });
    check_two_moments(xs, 2.0, 2.0, 4.0 * (3 + 15.0 * 2 / 4));
  }
  SUBCASE("shape 0.5 mean 5") {
    const auto xs = draw(kDraws, [&] { return dist::sample_inverse_gaussian({0.5, 5}, r); });
    const double var = 125 / 0.5;
    check_two_moments(xs, 5.0, var, var * var * (3 + 15.0 * 5 / 0.5));
  }
  SUBCASE("huge shape concentrates at the mean") {
    const auto m = oracle::moments(draw(kDraws, [&] { return dist::sample_inverse_gaussian({1e6, 3}, r); }));
    CHECK(std::sqrt(m.var) < 0.01);
    CHECK(m.mean == doctest::Approx(3.0).epsilon(1e-3));
  }
  CHECK_THROWS_AS(dist::sample_inverse_gaussian({0, 1}, r), DomainError);
  CHECK_THROWS_AS(dist::sample_inverse_gaussian({1, -1}, r), DomainError);
}

TEST_CASE("inverse gaussian matches its cdf and a rejection sampler") {
  const std::size_t n = 10000;
  const std::vector<std::pair<double, double>> settings{{1, 1}, {4, 2}, {0.5, 5}};
  std::uint64_t seed = 100;
  for (auto [a, b] : settings) {
    CAPTURE(a);
    CAPTURE(b);
    RngStream r(seed++, 0);
    const auto xs = draw(static_cast<long>(n), [&] { return dist::sample_inverse_gaussian({a, b}, r); });
    const double d = oracle::ks_statistic(xs, [&](double x) { return oracle::inverse_gaussian_cdf(x, a, b); });
    CHECK(d < oracle::ks_critical(n));
    const auto ref = oracle::inverse_gaussian_by_rejection(a, b, n, seed * 31);
    CHECK(oracle::ks_two_sample(xs, ref) < oracle::ks_critical(n, n));
  }
}

TEST_CASE("gamma moments") {
  RngStream r(12, 0);
  SUBCASE("exponential") {
    check_two_moments(draw(kDraws, [&] { return dist::sample_gamma(1, 1, r); }), 1, 1, gamma_mu4(1, 1));
  }
  SUBCASE("shape 3 rate 2") {
    check_two_moments(draw(kDraws, [&] { return dist::sample_gamma(3, 2, r); }), 1.5, 0.75, gamma_mu4(3, 2));
  }
  SUBCASE("small shape") {
    check_two_moments(draw(kDraws, [&] { return dist::sample_gamma(0.3, 0.5, r); }), 0.6, 1.2,
                      gamma_mu4(0.3, 0.5));
  }
  SUBCASE("large shape") {
    check_two_moments(draw(kDraws, [&] { return dist::sample_gamma(251, 40, r); }), 251.0 / 40, 251.0 / 1600,
                      gamma_mu4(251, 40));
  }
  CHECK_THROWS_AS(dist::sample_gamma(0, 1, r), DomainError);
  CHECK_THROWS_AS(dist::sample_gamma(1, 0, r), DomainError);
}

TEST_CASE("inverse gamma moments") {
  RngStream r(13, 0);
  auto var_of = [](double a, double g) { return g * g / ((a - 1) * (a - 1) * (a - 2)); };
  auto mu4_of = [&](double a, double g) {
    const double v = var_of(a, g);
    return v * v * (3 + 6 * (5 * a - 11) / ((a - 3) * (a - 4)));
  };
  for (auto [a, g] : std::vector<std::pair<double, double>>{{5, 2}, {6, 5}, {8, 1}}) {
    CAPTURE(a);
    const auto xs = draw(kDraws, [&] { return dist::sample_inverse_gamma(a, g, r); });
    check_two_moments(xs, g / (a - 1), var_of(a, g), mu4_of(a, g));
  }
  CHECK_THROWS_AS(dist::sample_inverse_gamma(-1, 1, r), DomainError);
  CHECK_THROWS_AS(dist::sample_inverse_gamma(1, 0, r), DomainError);
}

TEST_CASE("inverse gamma with heavy tails follows its law") {
  // Shapes 2 and 3 lack the higher moments a standard-error test needs, so
  // the reciprocal's gamma moments and the distribution function are checked.
  RngStream r(14, 0);
  const double g500 = std::log(500.0) / 500.0;
  for (auto [a, g] : std::vector<std::pair<double, double>>{{2, 1}, {2, g500}, {3, 4}}) {
    CAPTURE(a);
    CAPTURE(g);
    const auto xs = draw(kDraws, [&] { return dist::sample_inverse_gamma(a, g, r); });
    std::vector<double> inv(xs.size());
    std::transform(xs.begin(), xs.end(), inv.begin(), [](double x) { return 1 / x; });
    check_two_moments(inv, a / g, a / (g * g), gamma_mu4(a, g));
    boost::math::inverse_gamma_distribution<double> law(a, g);
    const std::vector<double> head(xs.begin(), xs.begin() + 10000);
    CHECK(oracle::ks_statistic(head, [&](double x) { return boost::math::cdf(law, x); }) <
          oracle::ks_critical(head.size()));
    // Median as a finite-variance location check of the scale.
    std::vector<double> sorted = xs;
    std::nth_element(sorted.begin(), sorted.begin() + kDraws / 2, sorted.end());
    const double med = boost::math::quantile(law, 0.5);
    const double dens = boost::math::pdf(law, med);
    const double se = 0.5 / (dens * std::sqrt(double(kDraws)));
    CHECK(std::abs(sorted[kDraws / 2] - med) < 3 * se);
  }
}

TEST_CASE("beta moments") {
  RngStream r(15, 0);
  auto check_beta = [&](double a, double b) {
    const double s = a + b;
    const double var = a * b / (s * s * (s + 1));
    const double exkurt = 6 * ((a - b) * (a - b) * (s + 1) - a * b * (s + 2)) / (a * b * (s + 2) * (s + 3));
    check_two_moments(draw(kDraws, [&] { return dist::sample_beta(a, b, r); }), a / s, var,
                      var * var * (3 + exkurt));
  };
  SUBCASE("uniform") { check_beta(1, 1); }
  SUBCASE("scaled prior at n 500 kappa 0.3") {
    const double g = 30 * (3 * 0.3 * std::log(500.0) - 1);
    CHECK(30 / (30 + g) == doctest::Approx(0.1788).epsilon(1e-3));
    check_beta(30, g);
  }
  SUBCASE("symmetric 2 2") { check_beta(2, 2); }
  SUBCASE("skewed") { check_beta(0.5, 3); }
  CHECK_THROWS_AS(dist::sample_beta(0, 1, r), DomainError);
}

TEST_CASE("laplace moments and tail") {
  RngStream r(16, 0);
  for (double theta : {1.0, 2.0, 0.3}) {
    CAPTURE(theta);
    const double var = 2 / (theta * theta);
    check_two_moments(draw(kDraws, [&] { return dist::sample_laplace(theta, r); }), 0.0, var, 6 * var * var);
  }
  const auto xs = draw(kDraws, [&] { return dist::sample_laplace(1.0, r); });
  double tail = 0;
  for (double x : xs) tail += std::abs(x) > 3;
  tail /= kDraws;
  const double p = std::exp(-3.0);
  CHECK(std::abs(tail - p) < 3 * std::sqrt(p * (1 - p) / kDraws));
  CHECK_THROWS_AS(dist::sample_laplace(0, r), DomainError);
}

namespace {

void check_mvn(const Eigen::MatrixXd& A, const Eigen::VectorXd& c, RngStream& r) {
  const Eigen::Index p = A.rows();
  const Eigen::MatrixXd cov = A.inverse();
  const Eigen::VectorXd mu = cov * c;
  Eigen::MatrixXd draws(kDraws, p);
  for (long k = 0; k < kDraws; ++k) draws.row(k) = dist::sample_mvn_precision(A, c, r).transpose();
  const Eigen::VectorXd mean = draws.colwise().mean().transpose();
  const Eigen::MatrixXd centered = draws.rowwise() - mean.transpose();
  const Eigen::MatrixXd scov = centered.transpose() * centered / double(kDraws - 1);
  for (Eigen::Index i = 0; i < p; ++i) {
    CHECK(std::abs(mean[i] - mu[i]) < 3 * std::sqrt(cov(i, i) / kDraws));
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double se = std::sqrt((cov(i, i) * cov(j, j) + cov(i, j) * cov(i, j)) / kDraws);
      CHECK(std::abs(scov(i, j) - cov(i, j)) < 3 * se);
    }
  }
}

}  // namespace

TEST_CASE("mvn with precision parameterization") {
  RngStream r(17, 0);
  SUBCASE("identity") { check_mvn(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2), r); }
  SUBCASE("diagonal") {
    Eigen::MatrixXd A = Eigen::Vector2d(4, 1).asDiagonal();
    check_mvn(A, Eigen::Vector2d(4, 1), r);
    CHECK((A.inverse() * Eigen::Vector2d(4, 1)).isApprox(Eigen::Vector2d(1, 1)));
  }
  SUBCASE("correlated") {
    Eigen::Matrix2d A;
    A << 2, 1, 1, 2;
    CHECK((A.inverse() * Eigen::Vector2d(3, 3)).isApprox(Eigen::Vector2d(1, 1)));
    check_mvn(A, Eigen::Vector2d(3, 3), r);
  }
  SUBCASE("random spd") {
    std::mt19937_64 gen(5);
    std::normal_distribution<double> z;
    for (int p : {3, 6, 10}) {
      Eigen::MatrixXd B(p, p);
      for (int i = 0; i < p * p; ++i) B.data()[i] = z(gen);
      const Eigen::MatrixXd A = B * B.transpose() + 0.5 * Eigen::MatrixXd::Identity(p, p);
      Eigen::VectorXd c(p);
      for (int i = 0; i < p; ++i) c[i] = z(gen);
      check_mvn(A, c, r);
    }
  }
}

TEST_CASE("mvn reads only the lower triangle") {
  Eigen::Matrix2d A;
  A << 2, 999, 1, 2;
  Eigen::Matrix2d full;
  full << 2, 1, 1, 2;
  RngStream a(3, 3), b(3, 3);
  CHECK(dist::sample_mvn_precision(A, Eigen::Vector2d(1, 2), a) ==
        dist::sample_mvn_precision(full, Eigen::Vector2d(1, 2), b));
}

TEST_CASE("cholesky jitter policy") {
  // Singular but symmetric positive semidefinite: jitter rescues it.
  Eigen::Matrix2d psd;
  psd << 1, 1, 1, 1;
  CHECK_NOTHROW(dist::factor_with_jitter(psd));

  Eigen::Matrix2d indefinite;
  indefinite << 1, 0, 0, -1;
  try {
    dist::factor_with_jitter(indefinite);
    FAIL("expected a conditioning error");
  } catch (const ConditioningError& e) {
    const auto& levels = e.jitter_levels();
    REQUIRE(levels.size() == 5);
    CHECK(levels.front() == doctest::Approx(0.0));  // mean(diag) = 0 scales every level
  }

  Eigen::Matrix2d neg;
  neg << 1, 0, 0, -1e-3;
  try {
    dist::factor_with_jitter(neg);
    FAIL("expected a conditioning error");
  } catch (const ConditioningError& e) {
    const auto& levels = e.jitter_levels();
    REQUIRE(levels.size() == 5);
    const double scale = (1 - 1e-3) / 2;
    CHECK(levels.front() == doctest::Approx(1e-10 * scale));
    CHECK(levels.back() == doctest::Approx(1e-6 * scale));
  }
}
