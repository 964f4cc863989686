#include "rbreg/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "rbreg/distributions.hpp"
#include "rbreg/errors.hpp"

namespace rbreg::sim {

SimDesign SimDesign::standard(Eigen::Index n, double kappa, RngStream stream) {
  SimDesign d;
  d.n = n;
  d.kappa = kappa;
  d.hyper = PriorHyperparams::scaled(n, kappa);
  d.stream = stream;
  return d;
}

Eigen::Index SimDesign::p() const {
  // The small offset keeps products such as 0.3 * 500 from rounding up.
  return static_cast<Eigen::Index>(std::ceil(kappa * static_cast<double>(n) - 1e-9));
}

void SimDesign::validate() const {
  if (!(kappa > 0.0 && kappa < 1.0)) throw DomainError("kappa must lie in (0, 1)");
  if (n < 2) throw DomainError("simulation needs n >= 2");
  if (p() < 1 || p() >= n) throw DomainError("design needs 1 <= p < n");
  hyper.validate();
  if (frozen_theta && !(*frozen_theta > 0.0)) throw DomainError("frozen theta must be positive");
}

namespace {

struct PriorDraw {
  double phi_frac;
  double delta1_sq;
  double delta2_sq;
  std::vector<Component> labels;
  Eigen::VectorXd beta;
};

PriorDraw draw_coefficients(const PriorHyperparams& h, Eigen::Index p, RngStream& rng) {
  PriorDraw d;
  d.phi_frac = dist::sample_beta(h.alpha_phi, h.gamma_phi, rng);
  d.delta1_sq = dist::sample_inverse_gamma(h.alpha1, h.gamma1, rng);
  d.delta2_sq = dist::sample_inverse_gamma(h.alpha2, h.gamma2, rng);
  d.labels.resize(static_cast<std::size_t>(p));
  for (auto& t : d.labels) t = rng.uniform() < d.phi_frac ? Component::large : Component::small;
  d.beta.resize(p);
  const double sd1 = std::sqrt(d.delta1_sq);
  const double sd2 = std::sqrt(d.delta2_sq);
  for (Eigen::Index j = 0; j < p; ++j)
    d.beta[j] = rng.normal() * (d.labels[static_cast<std::size_t>(j)] == Component::large ? sd1 : sd2);
  return d;
}

}  // namespace

Dataset generate_dataset(const SimDesign& design) {
  design.validate();
  RngStream rng = design.stream;
  const Eigen::Index n = design.n;
  const Eigen::Index p = design.p();

  Dataset data;
  data.X.resize(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) data.X(i, j) = rng.normal();

  PriorDraw coef = draw_coefficients(design.hyper, p, rng);

  double theta = 0.0;
  if (design.frozen_theta) {
    theta = *design.frozen_theta;
  } else if (design.theta_prior == ThetaPrior::theta2_exponential) {
    theta = std::sqrt(rng.exponential(1.0));
  } else {
    theta = rng.exponential(1.0);
  }

  Eigen::VectorXd noise(n);
  for (Eigen::Index i = 0; i < n; ++i) noise[i] = dist::sample_laplace(theta, rng);
  data.Y = data.X * coef.beta + noise;

  Truth truth;
  truth.beta = std::move(coef.beta);
  truth.theta = theta;
  truth.labels = std::move(coef.labels);
  truth.phi_frac = coef.phi_frac;
  truth.delta1_sq = coef.delta1_sq;
  truth.delta2_sq = coef.delta2_sq;
  data.truth = std::move(truth);
  return data;
}

LargeCoefSummary check_large_coef_proportion(const SimDesign& design, double C, double eta,
                                             int reps) {
  design.validate();
  if (!(eta >= 1.0 && eta < kXi))
    throw DomainError("eta must satisfy 1 <= eta < 1.5 for the large-coefficient bound");
  if (!(C >= 0.0)) throw DomainError("C must be non-negative");
  if (reps < 100) throw PreconditionError("large-coefficient check needs at least 100 replications");

  const Eigen::Index p = design.p();
  const double threshold = C * std::pow(static_cast<double>(design.n), -0.5 * eta);
  LargeCoefSummary out{0.0, 0.0, 0.0, 0.0};
  for (int r = 0; r < reps; ++r) {
    RngStream rng = design.stream.derive({static_cast<std::uint64_t>(r)});
    const PriorDraw d = draw_coefficients(design.hyper, p, rng);
    const double share =
        static_cast<double>((d.beta.array().abs() > threshold).count()) / static_cast<double>(p);
    const double dev = std::abs(share - d.phi_frac) / d.phi_frac;
    out.mean_large_fraction += share;
    out.mean_phi_frac += d.phi_frac;
    out.mean_relative_deviation += dev;
    out.max_relative_deviation = std::max(out.max_relative_deviation, dev);
  }
  out.mean_large_fraction /= reps;
  out.mean_phi_frac /= reps;
  out.mean_relative_deviation /= reps;
  return out;
}

}  // namespace rbreg::sim
