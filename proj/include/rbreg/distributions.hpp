#pragma once

#include <Eigen/Dense>

#include "rbreg/rng.hpp"

namespace rbreg::dist {

// Inverse-Gaussian law with density
//   sqrt(a / 2 pi) t^{-3/2} exp(-a (t - b)^2 / (2 b^2 t)),  t > 0,
// i.e. shape a and mean b; the variance is b^3 / a.
struct InverseGaussianParams {
  double shape;
  double mean;
};

double sample_inverse_gaussian(const InverseGaussianParams& params, RngStream& rng);

// Gamma with (shape, rate); mean shape / rate.
double sample_gamma(double shape, double rate, RngStream& rng);

// Reciprocal of a Gamma(shape, rate = scale) draw; mean scale / (shape - 1).
double sample_inverse_gamma(double shape, double scale, RngStream& rng);

double sample_beta(double alpha, double beta, RngStream& rng);

// Laplace density (theta / 2) exp(-theta |t|).
double sample_laplace(double theta, RngStream& rng);

// Jitter schedule for the precision-matrix Cholesky: multiples of
// mean(diag(A)) tried in order after the unjittered attempt fails.
inline constexpr double kJitterStart = 1e-10;
inline constexpr double kJitterStop = 1e-6;

// One draw from N(A^{-1} c, A^{-1}) for a symmetric positive-definite A.
// Only the lower triangle of A is read.
Eigen::VectorXd sample_mvn_precision(const Eigen::MatrixXd& precision,
                                     const Eigen::VectorXd& shift, RngStream& rng);

// Cholesky factor of A with the jitter policy above; throws ConditioningError
// listing every jitter level attempted.
Eigen::LLT<Eigen::MatrixXd> factor_with_jitter(const Eigen::MatrixXd& precision);

}  // namespace rbreg::dist
