#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace rbreg {

// Mixture component of a coefficient: large-variance (delta_1^2) or
// small-variance (delta_2^2).
enum class Component : std::uint8_t { large = 1, small = 2 };

// Ground truth attached to simulated data.
struct Truth {
  Eigen::VectorXd beta;
  double theta = 0.0;
  std::vector<Component> labels;
  // Hyper-level draws that produced beta; zero when unknown.
  double phi_frac = 0.0;
  double delta1_sq = 0.0;
  double delta2_sq = 0.0;
};

// Observations Y = X beta + eps. Row i of X is the predictor vector of unit i.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd Y;
  std::optional<Truth> truth;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index p() const { return X.cols(); }

  // n >= 1, 1 <= p < n, |Y| = n, truth dimensions consistent.
  void validate() const;
};

// Hyperparameters of the hierarchical prior:
//   delta_k^2 ~ InverseGamma(alpha_k, gamma_k),  phi/p ~ Beta(alpha_phi, gamma_phi),
//   theta^2 ~ Exponential(theta2_rate).
struct PriorHyperparams {
  double alpha1 = 2.0;
  double gamma1 = 1.0;
  double alpha2 = 2.0;
  double gamma2 = 1.0;
  double alpha_phi = 1.0;
  double gamma_phi = 1.0;
  double theta2_rate = 1.0;

  // Size-dependent working prior for p/n close to kappa: alpha_phi = 30,
  // gamma_phi = 30 (3 kappa log n - 1), alpha_1 = alpha_2 = 2,
  // gamma_1 = log(n) / n, gamma_2 = n^{-1.5}, theta2_rate = 1.
  // Requires 3 kappa log n > 1.
  static PriorHyperparams scaled(Eigen::Index n, double kappa);

  void validate() const;

  double mean_phi_frac() const { return alpha_phi / (alpha_phi + gamma_phi); }
  // Inverse-gamma means; infinite when the shape is <= 1.
  double mean_delta1_sq() const;
  double mean_delta2_sq() const;
};

struct GibbsState {
  Eigen::VectorXd beta;
  std::vector<Component> labels;
  Eigen::VectorXd sigma2;
  double theta2 = 1.0;
  double delta1_sq = 1.0;
  double delta2_sq = 1.0;
  double phi_frac = 0.5;

  Eigen::Index large_count() const;
  // Positivity of all variances and 0 < phi_frac < 1; throws PreconditionError.
  void check_invariants() const;
  bool operator==(const GibbsState& other) const;
};

// Shape used for the theta^2 full conditional Gamma(shape, 1 + sum(sigma^2)/2).
enum class ThetaShapeRule {
  joint,          // n + 1, the conditional implied by the joint density
  half_n,  // n / 2 + 1
};

struct GibbsConfig {
  int total_iterations = 1000;
  int burn_in = 500;
  int thinning = 1;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  ThetaShapeRule theta_shape = ThetaShapeRule::joint;

  // Burn-in defaults to half of the iterations.
  static GibbsConfig with_iterations(int total, std::uint64_t seed = 0,
                                     std::uint64_t stream = 0);
  int retained_count() const { return (total_iterations - burn_in) / thinning; }
  void validate() const;
};

// Retained post-burn-in states and reducers over them.
struct PosteriorDraws {
  std::vector<GibbsState> states;

  std::size_t size() const { return states.size(); }
  // The Bayes point estimate: arithmetic mean of retained beta draws.
  Eigen::VectorXd mean_beta() const;
  // Per-coordinate quantiles (linear interpolation between order statistics);
  // column k holds probability probs[k].
  Eigen::MatrixXd beta_quantiles(const std::vector<double>& probs) const;
  double mean_theta2() const;
  double mean_delta1_sq() const;
  double mean_delta2_sq() const;
  double mean_phi_frac() const;
  // Fraction of retained draws with t_j = large, per coordinate.
  Eigen::VectorXd inclusion_frequency() const;
};

// phi delta_1^2 + (p - phi) delta_2^2: prior expectation of |beta|^2 given
// the hyper-level quantities.
double prior_expected_signal(double phi, double delta1_sq, double delta2_sq, double p);

// Squared Euclidean distance between an estimate and the truth.
double l2_error(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth);

}  // namespace rbreg
