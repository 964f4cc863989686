#pragma once

#include <optional>

#include "rbreg/model.hpp"
#include "rbreg/rng.hpp"

namespace rbreg::sim {

// Decay exponent of the small-component variance: gamma_2 = n^{-1.5}.
inline constexpr double kXi = 1.5;

// How the error scale theta of the Laplace(theta) noise is drawn.
enum class ThetaPrior {
  theta2_exponential,  // theta^2 ~ Exp(1), the prior the sampler assumes
  theta_exponential,   // theta ~ Exp(1)
};

struct SimDesign {
  Eigen::Index n = 500;
  double kappa = 0.3;
  PriorHyperparams hyper;
  RngStream stream;
  ThetaPrior theta_prior = ThetaPrior::theta2_exponential;
  // When set, every replication uses this theta instead of a prior draw.
  std::optional<double> frozen_theta;

  // Design with the size-scaled working prior at (n, kappa).
  static SimDesign standard(Eigen::Index n, double kappa, RngStream stream);

  // p = ceil(kappa n).
  Eigen::Index p() const;
  void validate() const;
};

// X with iid N(0, 1) entries, then phi/p, delta_1^2, delta_2^2, T, beta,
// theta and Laplace noise, in that order, all from design.stream.
Dataset generate_dataset(const SimDesign& design);

struct LargeCoefSummary {
  double mean_large_fraction;  // mean of B = p^{-1} #{j : |beta_j| > C n^{-eta/2}}
  double mean_phi_frac;
  double mean_relative_deviation;  // mean of |B - phi/p| / (phi/p)
  double max_relative_deviation;
};

// Monte Carlo check that the share of coefficients above C n^{-eta/2} tracks
// phi/p under the prior. Needs 1 <= eta < kXi and reps >= 100.
LargeCoefSummary check_large_coef_proportion(const SimDesign& design, double C, double eta,
                                             int reps);

}  // namespace rbreg::sim
