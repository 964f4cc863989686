#include <doctest.h>

#include <cmath>
#include <vector>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/inverse_gamma.hpp>
#include <boost/math/distributions/normal.hpp>

#include "oracles.hpp"
#include "rbreg/errors.hpp"
#include "rbreg/gibbs.hpp"
#include "rbreg/simulate.hpp"

using namespace rbreg;
using namespace rbreg::gibbs;

namespace {

constexpr long kDraws = 100000;
constexpr long kGof = 10000;

Dataset tiny_dataset(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> z;
  Dataset d;
  d.X.resize(n, p);
  d.Y.resize(n);
  for (Eigen::Index i = 0; i < d.X.size(); ++i) d.X.data()[i] = z(gen);
  for (Eigen::Index i = 0; i < n; ++i) d.Y[i] = z(gen);
  return d;
}

GibbsState tiny_state(const Dataset& d, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  GibbsState s;
  s.beta = Eigen::VectorXd::Zero(d.p());
  s.labels.assign(static_cast<std::size_t>(d.p()), Component::small);
  s.labels[0] = Component::large;
  s.sigma2.resize(d.n());
  for (Eigen::Index i = 0; i < d.n(); ++i) s.sigma2[i] = u(gen);
  s.theta2 = 1.3;
  s.delta1_sq = 2.0;
  s.delta2_sq = 0.3;
  s.phi_frac = 0.4;
  return s;
}

template <class F>
std::vector<double> repeat(long count, F&& f) {
  std::vector<double> xs(static_cast<std::size_t>(count));
  for (auto& x : xs) x = f();
  return xs;
}

}  // namespace

TEST_CASE("theta2 conditional") {
  RngStream r(1, 0);
  SUBCASE("no data reduces to the exponential prior") {
    const auto xs = repeat(kDraws, [&] { return draw_theta2({}, 1.0, ThetaShapeRule::joint, r); });
    CHECK(oracle::mean_z(oracle::moments(xs), 1.0, 1.0) < 3);
  }
  SUBCASE("ten observations with sigma^2 = 2") {
    const std::vector<double> s2(10, 2.0);
    const auto joint = repeat(kDraws, [&] { return draw_theta2(s2, 1.0, ThetaShapeRule::joint, r); });
    CHECK(oracle::mean_z(oracle::moments(joint), 11.0 / 11.0, 11.0 / 121.0) < 3);
    const auto literal = repeat(kDraws, [&] { return draw_theta2(s2, 1.0, ThetaShapeRule::half_n, r); });
    CHECK(oracle::mean_z(oracle::moments(literal), 6.0 / 11.0, 6.0 / 121.0) < 3);
  }
}

TEST_CASE("sigma2 conditional") {
  RngStream r(2, 0);
  SUBCASE("theta 1, residual 1") {
    const auto xs = repeat(kDraws, [&] { return 1 / draw_sigma2(1.0, 1.0, r); });
    CHECK(oracle::mean_z(oracle::moments(xs), 1.0, 1.0) < 3);
  }
  SUBCASE("theta 2, residual 0.5") {
    // InverseGaussian(shape 4, mean 4): variance 4^3 / 4.
    const auto xs = repeat(kDraws, [&] { return 1 / draw_sigma2(0.5, 4.0, r); });
    CHECK(oracle::mean_z(oracle::moments(xs), 4.0, 16.0) < 3);
  }
  SUBCASE("zero residual is clamped") {
    for (int k = 0; k < 1000; ++k) {
      const double s2 = draw_sigma2(0.0, 1.0, r);
      REQUIRE(std::isfinite(s2));
      REQUIRE(s2 > 0.0);
    }
  }
}

TEST_CASE("beta conditional") {
  RngStream r(3, 0);
  SUBCASE("one observation one coefficient") {
    Dataset d;
    d.X = Eigen::MatrixXd::Ones(1, 1);
    d.Y = Eigen::VectorXd::Constant(1, 2.0);
    GibbsState s = tiny_state(tiny_dataset(1, 1, 0), 0);
    s.sigma2[0] = 1;
    s.delta1_sq = 1;
    FullConditionalContext ctx{d, PriorHyperparams{}, s, r};
    const auto xs = repeat(kDraws, [&] {
      update_beta(ctx);
      return s.beta[0];
    });
    CHECK(oracle::mean_z(oracle::moments(xs), 1.0, 0.5) < 3);
    CHECK(oracle::var_z(oracle::moments(xs), 0.5, 3 * 0.25) < 3);
  }
  SUBCASE("flat prior limit is generalized least squares") {
    const Dataset d = tiny_dataset(30, 4, 9);
    GibbsState s = tiny_state(d, 4);
    s.delta1_sq = s.delta2_sq = 1e8;
    Eigen::MatrixXd A;
    Eigen::VectorXd c;
    beta_conditional(d, s, A, c);
    const Eigen::VectorXd mean = A.selfadjointView<Eigen::Lower>().llt().solve(c);
    const Eigen::VectorXd w = s.sigma2.cwiseInverse().cwiseSqrt();
    const Eigen::VectorXd gls = (w.asDiagonal() * d.X).colPivHouseholderQr().solve(w.cwiseProduct(d.Y));
    CHECK((mean - gls).norm() / gls.norm() < 1e-3);
  }
  SUBCASE("zero response gives a centered conditional") {
    Dataset d = tiny_dataset(10, 2, 3);
    d.Y.setZero();
    GibbsState s = tiny_state(d, 5);
    Eigen::MatrixXd A;
    Eigen::VectorXd c;
    beta_conditional(d, s, A, c);
    CHECK(c.norm() == 0.0);
    FullConditionalContext ctx{d, PriorHyperparams{}, s, r};
    const auto xs = repeat(kDraws, [&] {
      update_beta(ctx);
      return s.beta[1];
    });
    const auto m = oracle::moments(xs);
    CHECK(std::abs(m.mean) < 3 * std::sqrt(m.var / kDraws));
  }
  SUBCASE("draws match the dense oracle") {
    for (Eigen::Index p : {1, 2, 3}) {
      CAPTURE(p);
      const Dataset d = tiny_dataset(8, p, 20 + static_cast<std::uint64_t>(p));
      GibbsState s = tiny_state(d, 7);
      FullConditionalContext ctx{d, PriorHyperparams{}, s, r};
      // Dense oracle: explicit inverse of X' Gamma^{-1} X + V^{-1}.
      Eigen::MatrixXd A = d.X.transpose() * s.sigma2.cwiseInverse().asDiagonal() * d.X;
      for (Eigen::Index j = 0; j < p; ++j)
        A(j, j) += 1 / (s.labels[static_cast<std::size_t>(j)] == Component::large ? s.delta1_sq : s.delta2_sq);
      const Eigen::MatrixXd cov = A.inverse();
      const Eigen::VectorXd mu = cov * (d.X.transpose() * s.sigma2.cwiseInverse().cwiseProduct(d.Y));
      Eigen::MatrixXd draws(kDraws, p);
      for (long k = 0; k < kDraws; ++k) {
        update_beta(ctx);
        draws.row(k) = s.beta.transpose();
      }
      const Eigen::VectorXd mean = draws.colwise().mean().transpose();
      const Eigen::MatrixXd cen = draws.rowwise() - mean.transpose();
      const Eigen::MatrixXd scov = cen.transpose() * cen / double(kDraws - 1);
      for (Eigen::Index i = 0; i < p; ++i) {
        CHECK(std::abs(mean[i] - mu[i]) < 3 * std::sqrt(cov(i, i) / kDraws));
        for (Eigen::Index j = 0; j <= i; ++j)
          CHECK(std::abs(scov(i, j) - cov(i, j)) <
                3 * std::sqrt((cov(i, i) * cov(j, j) + cov(i, j) * cov(i, j)) / kDraws));
      }
    }
  }
}

TEST_CASE("label probabilities") {
  // At beta = 0 the normal densities are 1 / (delta sqrt(2 pi)):
  // (0.5 / 2) / (0.5 / 2 + 0.5 / 1) = 1 / 3.
  CHECK(large_component_probability(0.0, 0.5, 4.0, 1.0) == doctest::Approx(1.0 / 3.0));
  CHECK(large_component_probability(0.0, 0.5, 16.0, 1.0) == doctest::Approx(0.2));
  for (double b : {0.0, 0.3, 5.0, -40.0})
    CHECK(large_component_probability(b, 0.37, 2.5, 2.5) == doctest::Approx(0.37));
  CHECK(large_component_probability(50.0, 0.01, 4.0, 1.0) == doctest::Approx(1.0));

  for (double b : {0.0, 1e-6, 1.0, 1e3, -1e3})
    for (double d2 : {1e-10, 1e-4, 1.0}) {
      const double p = large_component_probability(b, 0.2, 1.0, d2);
      CAPTURE(b);
      CAPTURE(d2);
      REQUIRE(std::isfinite(p));
      REQUIRE(p >= 0.0);
      REQUIRE(p <= 1.0);
    }
  CHECK(large_component_probability(1e3, 0.2, 1.0, 1e-10) == 1.0);
  CHECK(large_component_probability(0.0, 0.2, 1.0, 1e-10) < 1e-4);
}

TEST_CASE("delta2 conditional") {
  RngStream r(4, 0);
  SUBCASE("empty group keeps the prior") {
    const auto xs = repeat(kDraws, [&] { return draw_delta2(5.0, 2.0, 0, 0.0, r); });
    CHECK(oracle::mean_z(oracle::moments(xs), 0.5, 4.0 / (16.0 * 3.0)) < 3);
  }
  SUBCASE("one member with beta^2 = 2") {
    const auto xs = repeat(kDraws, [&] { return draw_delta2(2.0, 1.0, 1, 2.0, r); });
    CHECK(oracle::mean_z(oracle::moments(xs), 4.0 / 3.0, 4.0 / (2.25 * 0.5)) < 3);
  }
  SUBCASE("all coefficients small and zero") {
    Dataset d = tiny_dataset(10, 6, 1);
    GibbsState s = tiny_state(d, 1);
    s.labels.assign(6, Component::small);
    PriorHyperparams h;
    h.alpha2 = 2.0;
    h.gamma2 = 0.7;
    FullConditionalContext ctx{d, h, s, r};
    const auto xs = repeat(kGof, [&] {
      update_delta2(ctx);
      return s.delta2_sq;
    });
    boost::math::inverse_gamma_distribution<double> law(2.0 + 3.0, 0.7);
    CHECK(oracle::ks_statistic(xs, [&](double x) { return boost::math::cdf(law, x); }) < oracle::ks_critical(xs.size()));
  }
}

TEST_CASE("phi conditional") {
  RngStream r(5, 0);
  const auto u = repeat(kGof, [&] { return draw_phi_frac(1, 1, 0, 0, r); });
  CHECK(oracle::ks_statistic(u, [](double x) { return x; }) < oracle::ks_critical(u.size()));
  const auto xs = repeat(kDraws, [&] { return draw_phi_frac(1, 1, 3, 1, r); });
  CHECK(oracle::mean_z(oracle::moments(xs), 4.0 / 6.0, 4.0 * 2.0 / (36.0 * 7.0)) < 3);
  const auto high = repeat(1000, [&] { return draw_phi_frac(1, 1, 5000, 0, r); });
  for (double v : high) {
    REQUIRE(v > 0.99);
    REQUIRE(v < 1.0);
  }
}

TEST_CASE("each update leaves its own full conditional invariant") {
  // Iterate one update with the rest of the state frozen and test the iterates
  // against the known conditional law.
  const Dataset d = tiny_dataset(12, 3, 11);
  const PriorHyperparams h{2.5, 1.0, 3.0, 0.2, 2.0, 3.0, 1.5};
  RngStream r(6, 0);

  SUBCASE("theta2") {
    GibbsState s = tiny_state(d, 2);
    FullConditionalContext ctx{d, h, s, r};
    const auto xs = repeat(kGof, [&] {
      update_theta2(ctx);
      return s.theta2;
    });
    boost::math::gamma_distribution<double> law(12 + 1.0, 1 / (1.5 + 0.5 * s.sigma2.sum()));
    CHECK(oracle::chi_square_gof(xs, [&](double x) { return boost::math::cdf(law, x); }) > 0.01);
  }
  SUBCASE("sigma2") {
    GibbsState s = tiny_state(d, 2);
    s.beta = Eigen::Vector3d(0.3, -0.2, 0.1);
    FullConditionalContext ctx{d, h, s, r};
    const double res = d.Y[4] - d.X.row(4).dot(s.beta);
    const auto xs = repeat(kGof, [&] {
      update_sigma2(ctx);
      return 1 / s.sigma2[4];
    });
    const double theta = std::sqrt(s.theta2);
    CHECK(oracle::chi_square_gof(xs, [&](double x) {
            return oracle::inverse_gaussian_cdf(x, s.theta2, theta / std::abs(res));
          }) > 0.01);
  }
  SUBCASE("beta") {
    GibbsState s = tiny_state(d, 2);
    FullConditionalContext ctx{d, h, s, r};
    Eigen::MatrixXd A;
    Eigen::VectorXd c;
    beta_conditional(d, s, A, c);
    const Eigen::MatrixXd full = A.selfadjointView<Eigen::Lower>();
    const Eigen::MatrixXd cov = full.inverse();
    const Eigen::VectorXd mu = cov * c;
    const auto xs = repeat(kGof, [&] {
      update_beta(ctx);
      return s.beta[2];
    });
    boost::math::normal_distribution<double> law(mu[2], std::sqrt(cov(2, 2)));
    CHECK(oracle::chi_square_gof(xs, [&](double x) { return boost::math::cdf(law, x); }) > 0.01);
  }
  SUBCASE("labels") {
    GibbsState s = tiny_state(d, 2);
    s.beta = Eigen::Vector3d(0.9, -0.4, 0.05);
    FullConditionalContext ctx{d, h, s, r};
    std::vector<double> counts(2, 0.0);
    for (long k = 0; k < kGof; ++k) {
      update_t(ctx);
      counts[s.labels[1] == Component::large ? 0 : 1] += 1;
    }
    const double p1 = large_component_probability(-0.4, s.phi_frac, s.delta1_sq, s.delta2_sq);
    CHECK(oracle::chi_square_counts(counts, {p1, 1 - p1}) > 0.01);
  }
  SUBCASE("delta2") {
    GibbsState s = tiny_state(d, 2);
    s.beta = Eigen::Vector3d(0.9, -0.4, 0.05);
    FullConditionalContext ctx{d, h, s, r};
    const auto xs = repeat(kGof, [&] {
      update_delta2(ctx);
      return s.delta1_sq;
    });
    boost::math::inverse_gamma_distribution<double> law(2.5 + 0.5, 1.0 + 0.5 * 0.81);
    CHECK(oracle::chi_square_gof(xs, [&](double x) { return boost::math::cdf(law, x); }) > 0.01);
  }
  SUBCASE("phi") {
    GibbsState s = tiny_state(d, 2);
    FullConditionalContext ctx{d, h, s, r};
    const auto xs = repeat(kGof, [&] {
      update_phi(ctx);
      return s.phi_frac;
    });
    boost::math::beta_distribution<double> law(2.0 + 1, 3.0 + 2);
    CHECK(oracle::chi_square_gof(xs, [&](double x) { return boost::math::cdf(law, x); }) > 0.01);
  }
}

TEST_CASE("initial state") {
  const Dataset d = sim::generate_dataset(sim::SimDesign::standard(100, 0.3, RngStream(2, 0)));
  const auto h = PriorHyperparams::scaled(100, 0.3);
  const GibbsState s = initial_state(d, h);
  Eigen::MatrixXd g = d.X.transpose() * d.X + Eigen::MatrixXd::Identity(d.p(), d.p());
  const Eigen::VectorXd ridge = g.ldlt().solve(d.X.transpose() * d.Y);
  CHECK((s.beta - ridge).norm() < 1e-10 * (1 + ridge.norm()));
  CHECK(s.sigma2.minCoeff() >= kInitialSigma2Floor);
  CHECK(s.theta2 == 1.0);
  CHECK(s.delta1_sq == doctest::Approx(h.mean_delta1_sq()));
  CHECK(s.phi_frac == doctest::Approx(h.mean_phi_frac()));
  const auto n_large = static_cast<Eigen::Index>(std::ceil(double(d.p()) * h.mean_phi_frac()));
  CHECK(s.large_count() == n_large);
  double min_large = 1e300, max_small = 0;
  for (Eigen::Index j = 0; j < d.p(); ++j) {
    if (s.labels[static_cast<std::size_t>(j)] == Component::large) min_large = std::min(min_large, std::abs(s.beta[j]));
    else max_small = std::max(max_small, std::abs(s.beta[j]));
  }
  CHECK(min_large >= max_small);
  CHECK_NOTHROW(s.check_invariants());
}

TEST_CASE("chain smoke run and determinism") {
  const Dataset d = sim::generate_dataset(sim::SimDesign::standard(50, 0.1, RngStream(8, 0)));
  REQUIRE(d.p() == 5);
  const auto h = PriorHyperparams::scaled(50, 0.1);
  const auto config = GibbsConfig::with_iterations(400, 3, 0);
  const auto a = run_chain(d, h, config);
  REQUIRE(a.size() == 200u);
  for (const auto& s : a.states) CHECK_NOTHROW(s.check_invariants());
  CHECK(a.mean_beta().allFinite());
  const auto b = run_chain(d, h, config);
  for (std::size_t k = 0; k < a.size(); ++k) REQUIRE(a.states[k] == b.states[k]);
  auto other = config;
  other.seed = 4;
  CHECK_FALSE(run_chain(d, h, other).states.back() == a.states.back());
}

TEST_CASE("every sweep preserves the state invariants") {
  const Dataset d = sim::generate_dataset(sim::SimDesign::standard(80, 0.4, RngStream(9, 0)));
  const auto h = PriorHyperparams::scaled(80, 0.4);
  GibbsState s = initial_state(d, h);
  RngStream r(1, 1);
  FullConditionalContext ctx{d, h, s, r};
  for (int it = 0; it < 200; ++it) {
    sweep(ctx);
    REQUIRE_NOTHROW(s.check_invariants());
  }
}

TEST_CASE("chain failures carry the iteration") {
  Dataset d = sim::generate_dataset(sim::SimDesign::standard(50, 0.1, RngStream(8, 0)));
  d.Y[3] = std::nan("");
  try {
    run_chain(d, PriorHyperparams::scaled(50, 0.1), GibbsConfig::with_iterations(10));
    FAIL("expected a chain error");
  } catch (const ChainError& e) {
    CHECK(e.iteration() == 1);
  }
  const Dataset ok = sim::generate_dataset(sim::SimDesign::standard(50, 0.1, RngStream(8, 0)));
  GibbsConfig bad = GibbsConfig::with_iterations(10);
  bad.burn_in = 10;
  CHECK_THROWS_AS(run_chain(ok, PriorHyperparams::scaled(50, 0.1), bad), ConfigError);
}
