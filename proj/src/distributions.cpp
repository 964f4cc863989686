#include "rbreg/distributions.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include "rbreg/errors.hpp"

namespace rbreg::dist {

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    std::ostringstream os;
    os << what << " must be positive and finite, got " << v;
    throw DomainError(os.str());
  }
}

}  // namespace

double sample_inverse_gaussian(const InverseGaussianParams& params, RngStream& rng) {
  const double a = params.shape;
  const double b = params.mean;
  require_positive(a, "inverse-Gaussian shape");
  require_positive(b, "inverse-Gaussian mean");

  // Transformation with multiple roots: the smaller root of the chi-square(1)
  // equation, then pick it with probability b / (b + x), else b^2 / x.
  const double nu = rng.normal();
  const double w = b * nu * nu / a;
  const double x = b / (1.0 + 0.5 * w + std::sqrt(w * (1.0 + 0.25 * w)));
  if (rng.uniform() * (b + x) <= b) return x;
  return b * (b / x);
}

double sample_gamma(double shape, double rate, RngStream& rng) {
  require_positive(shape, "gamma shape");
  require_positive(rate, "gamma rate");
  std::gamma_distribution<double> g(shape, 1.0);
  return g(rng.engine()) / rate;
}

double sample_inverse_gamma(double shape, double scale, RngStream& rng) {
  require_positive(shape, "inverse-gamma shape");
  require_positive(scale, "inverse-gamma scale");
  return 1.0 / sample_gamma(shape, scale, rng);
}

double sample_beta(double alpha, double beta, RngStream& rng) {
  require_positive(alpha, "beta alpha");
  require_positive(beta, "beta beta");
  const double x = sample_gamma(alpha, 1.0, rng);
  const double y = sample_gamma(beta, 1.0, rng);
  return x / (x + y);
}

double sample_laplace(double theta, RngStream& rng) {
  require_positive(theta, "Laplace rate");
  const double e = rng.exponential(theta);
  return rng.uniform() < 0.5 ? -e : e;
}

Eigen::LLT<Eigen::MatrixXd> factor_with_jitter(const Eigen::MatrixXd& precision) {
  if (precision.rows() != precision.cols())
    throw DimensionError("precision matrix must be square");
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() == Eigen::Success) return llt;

  const double scale = precision.diagonal().mean();
  std::vector<double> tried;
  for (double level = kJitterStart; level <= kJitterStop * (1.0 + 1e-9); level *= 10.0) {
    const double jitter = level * scale;
    tried.push_back(jitter);
    Eigen::MatrixXd jittered = precision;
    jittered.diagonal().array() += jitter;
    llt.compute(jittered);
    if (llt.info() == Eigen::Success) return llt;
  }
  std::ostringstream os;
  os << "Cholesky factorization failed after jitter up to " << kJitterStop
     << " x mean(diag)";
  throw ConditioningError(os.str(), std::move(tried));
}

Eigen::VectorXd sample_mvn_precision(const Eigen::MatrixXd& precision,
                                     const Eigen::VectorXd& shift, RngStream& rng) {
  if (shift.size() != precision.rows())
    throw DimensionError("shift vector length does not match precision matrix");
  const auto llt = factor_with_jitter(precision);
  const auto lower = llt.matrixL();

  // v = L^{-T} (L^{-1} c + z): mean A^{-1} c, covariance (L L^T)^{-1}.
  Eigen::VectorXd v = lower.solve(shift);
  for (Eigen::Index j = 0; j < v.size(); ++j) v[j] += rng.normal();
  llt.matrixU().solveInPlace(v);
  return v;
}

}  // namespace rbreg::dist
