#include "rbreg/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rbreg/errors.hpp"

namespace rbreg {

void Dataset::validate() const {
  if (n() < 1) throw DimensionError("dataset needs at least one observation");
  if (p() < 1 || p() >= n()) {
    std::ostringstream os;
    os << "dataset needs 1 <= p < n, got n=" << n() << " p=" << p();
    throw DimensionError(os.str());
  }
  if (Y.size() != n()) throw DimensionError("response length does not match rows of X");
  if (truth) {
    if (truth->beta.size() != p()) throw DimensionError("true beta length does not match p");
    if (!truth->labels.empty() && static_cast<Eigen::Index>(truth->labels.size()) != p())
      throw DimensionError("true labels length does not match p");
  }
}

PriorHyperparams PriorHyperparams::scaled(Eigen::Index n, double kappa) {
  if (n < 2) throw DomainError("scaled prior needs n >= 2");
  if (!(kappa > 0.0 && kappa < 1.0)) throw DomainError("kappa must lie in (0, 1)");
  const double log_n = std::log(static_cast<double>(n));
  const double excess = 3.0 * kappa * log_n - 1.0;
  if (!(excess > 0.0)) {
    std::ostringstream os;
    os << "scaled prior requires 3 kappa log(n) > 1 (kappa=" << kappa << ", n=" << n << ")";
    throw DomainError(os.str());
  }
  PriorHyperparams h;
  h.alpha_phi = 30.0;
  h.gamma_phi = 30.0 * excess;
  h.alpha1 = 2.0;
  h.gamma1 = log_n / static_cast<double>(n);
  h.alpha2 = 2.0;
  h.gamma2 = std::pow(static_cast<double>(n), -1.5);
  h.theta2_rate = 1.0;
  return h;
}

void PriorHyperparams::validate() const {
  for (double v : {alpha1, gamma1, alpha2, gamma2, alpha_phi, gamma_phi, theta2_rate}) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw DomainError("all prior hyperparameters must be positive and finite");
  }
}

double PriorHyperparams::mean_delta1_sq() const {
  return alpha1 > 1.0 ? gamma1 / (alpha1 - 1.0) : std::numeric_limits<double>::infinity();
}

double PriorHyperparams::mean_delta2_sq() const {
  return alpha2 > 1.0 ? gamma2 / (alpha2 - 1.0) : std::numeric_limits<double>::infinity();
}

Eigen::Index GibbsState::large_count() const {
  return std::count(labels.begin(), labels.end(), Component::large);
}

void GibbsState::check_invariants() const {
  if (static_cast<Eigen::Index>(labels.size()) != beta.size())
    throw PreconditionError("labels and beta differ in length");
  if (!beta.allFinite()) throw PreconditionError("non-finite beta");
  if (!(sigma2.array() > 0.0).all() || !sigma2.allFinite())
    throw PreconditionError("sigma^2 must be positive and finite");
  if (!(theta2 > 0.0) || !std::isfinite(theta2)) throw PreconditionError("theta^2 must be positive");
  if (!(delta1_sq > 0.0) || !std::isfinite(delta1_sq))
    throw PreconditionError("delta_1^2 must be positive");
  if (!(delta2_sq > 0.0) || !std::isfinite(delta2_sq))
    throw PreconditionError("delta_2^2 must be positive");
  if (!(phi_frac > 0.0 && phi_frac < 1.0)) throw PreconditionError("phi/p must lie in (0, 1)");
}

bool GibbsState::operator==(const GibbsState& o) const {
  return beta.size() == o.beta.size() && beta == o.beta && labels == o.labels &&
         sigma2.size() == o.sigma2.size() && sigma2 == o.sigma2 && theta2 == o.theta2 &&
         delta1_sq == o.delta1_sq && delta2_sq == o.delta2_sq && phi_frac == o.phi_frac;
}

GibbsConfig GibbsConfig::with_iterations(int total, std::uint64_t seed, std::uint64_t stream) {
  GibbsConfig c;
  c.total_iterations = total;
  c.burn_in = total / 2;
  c.thinning = 1;
  c.seed = seed;
  c.stream = stream;
  return c;
}

void GibbsConfig::validate() const {
  if (total_iterations < 1) throw ConfigError("total iterations must be positive");
  if (burn_in < 0 || burn_in >= total_iterations)
    throw ConfigError("burn-in must satisfy 0 <= burn-in < total iterations");
  if (thinning < 1) throw ConfigError("thinning must be positive");
}

namespace {

template <class F>
double mean_of(const std::vector<GibbsState>& states, F&& f) {
  if (states.empty()) throw PreconditionError("no retained draws");
  double acc = 0.0;
  for (const auto& s : states) acc += f(s);
  return acc / static_cast<double>(states.size());
}

}  // namespace

Eigen::VectorXd PosteriorDraws::mean_beta() const {
  if (states.empty()) throw PreconditionError("no retained draws");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(states.front().beta.size());
  for (const auto& s : states) acc += s.beta;
  return acc / static_cast<double>(states.size());
}

Eigen::MatrixXd PosteriorDraws::beta_quantiles(const std::vector<double>& probs) const {
  if (states.empty()) throw PreconditionError("no retained draws");
  const Eigen::Index p = states.front().beta.size();
  const std::size_t m = states.size();
  Eigen::MatrixXd out(p, static_cast<Eigen::Index>(probs.size()));
  std::vector<double> column(m);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (std::size_t d = 0; d < m; ++d) column[d] = states[d].beta[j];
    std::sort(column.begin(), column.end());
    for (std::size_t k = 0; k < probs.size(); ++k) {
      const double q = probs[k];
      if (!(q >= 0.0 && q <= 1.0)) throw DomainError("quantile probability outside [0, 1]");
      const double h = q * static_cast<double>(m - 1);
      const auto lo = static_cast<std::size_t>(std::floor(h));
      const std::size_t hi = std::min(lo + 1, m - 1);
      out(j, static_cast<Eigen::Index>(k)) =
          column[lo] + (h - static_cast<double>(lo)) * (column[hi] - column[lo]);
    }
  }
  return out;
}

double PosteriorDraws::mean_theta2() const {
  return mean_of(states, [](const GibbsState& s) { return s.theta2; });
}
double PosteriorDraws::mean_delta1_sq() const {
  return mean_of(states, [](const GibbsState& s) { return s.delta1_sq; });
}
double PosteriorDraws::mean_delta2_sq() const {
  return mean_of(states, [](const GibbsState& s) { return s.delta2_sq; });
}
double PosteriorDraws::mean_phi_frac() const {
  return mean_of(states, [](const GibbsState& s) { return s.phi_frac; });
}

Eigen::VectorXd PosteriorDraws::inclusion_frequency() const {
  if (states.empty()) throw PreconditionError("no retained draws");
  Eigen::VectorXd freq = Eigen::VectorXd::Zero(states.front().beta.size());
  for (const auto& s : states)
    for (std::size_t j = 0; j < s.labels.size(); ++j)
      if (s.labels[j] == Component::large) freq[static_cast<Eigen::Index>(j)] += 1.0;
  return freq / static_cast<double>(states.size());
}

double prior_expected_signal(double phi, double delta1_sq, double delta2_sq, double p) {
  return phi * delta1_sq + (p - phi) * delta2_sq;
}

double l2_error(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth) {
  if (estimate.size() != truth.size()) {
    std::ostringstream os;
    os << "l2_error: length mismatch " << estimate.size() << " vs " << truth.size();
    throw DimensionError(os.str());
  }
  return (estimate - truth).squaredNorm();
}

}  // namespace rbreg
