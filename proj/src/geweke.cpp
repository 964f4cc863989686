#include "rbreg/geweke.hpp"

#include <algorithm>
#include <cmath>

#include "rbreg/distributions.hpp"
#include "rbreg/errors.hpp"
#include "rbreg/gibbs.hpp"

namespace rbreg::gibbs {

std::vector<TestFunction> default_test_functions() {
  return {
      {"beta1", [](const GibbsState& s) { return s.beta[0]; }},
      {"beta1_sq", [](const GibbsState& s) { return s.beta[0] * s.beta[0]; }},
      {"theta2", [](const GibbsState& s) { return s.theta2; }},
      {"delta1_sq", [](const GibbsState& s) { return s.delta1_sq; }},
      {"phi_frac", [](const GibbsState& s) { return s.phi_frac; }},
      {"n_large", [](const GibbsState& s) { return static_cast<double>(s.large_count()); }},
  };
}

double GewekeResult::max_abs_z() const {
  double m = 0.0;
  for (double z : z_scores) m = std::max(m, std::abs(z));
  return m;
}

namespace {

GibbsState draw_from_prior(const PriorHyperparams& h, Eigen::Index n, Eigen::Index p, RngStream& rng) {
  GibbsState s;
  s.theta2 = dist::sample_gamma(1.0, h.theta2_rate, rng);
  s.sigma2.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) s.sigma2[i] = rng.exponential(0.5 * s.theta2);
  s.phi_frac = dist::sample_beta(h.alpha_phi, h.gamma_phi, rng);
  s.delta1_sq = dist::sample_inverse_gamma(h.alpha1, h.gamma1, rng);
  s.delta2_sq = dist::sample_inverse_gamma(h.alpha2, h.gamma2, rng);
  s.labels.resize(static_cast<std::size_t>(p));
  s.beta.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const bool large = rng.uniform() < s.phi_frac;
    s.labels[static_cast<std::size_t>(j)] = large ? Component::large : Component::small;
    s.beta[j] = rng.normal() * std::sqrt(large ? s.delta1_sq : s.delta2_sq);
  }
  return s;
}

void draw_response(Dataset& data, const GibbsState& s, RngStream& rng) {
  data.Y = data.X * s.beta;
  for (Eigen::Index i = 0; i < data.n(); ++i) data.Y[i] += rng.normal() * std::sqrt(s.sigma2[i]);
}

}  // namespace

GewekeResult geweke_joint_test(const GewekeConfig& config, const std::vector<TestFunction>& functions) {
  if (config.cycles <= 0) throw PreconditionError("Geweke test needs a positive number of cycles");
  if (functions.empty()) throw PreconditionError("Geweke test needs at least one test function");
  if (config.p < 1 || config.p >= config.n) throw DimensionError("Geweke test needs 1 <= p < n");
  config.hyper.validate();

  const std::size_t k = functions.size();
  const long m = config.cycles;
  RngStream root(config.seed, 0);

  // Marginal-conditional: independent prior draws.
  std::vector<double> mc_sum(k, 0.0), mc_sq(k, 0.0);
  {
    RngStream rng = root.derive({1});
    for (long c = 0; c < m; ++c) {
      const GibbsState s = draw_from_prior(config.hyper, config.n, config.p, rng);
      for (std::size_t f = 0; f < k; ++f) {
        const double g = functions[f].eval(s);
        mc_sum[f] += g;
        mc_sq[f] += g * g;
      }
    }
  }

  // Successive-conditional: Gibbs sweep, then fresh data.
  const long batches = config.batches > 0 ? config.batches
                                          : std::max(2L, static_cast<long>(std::sqrt(static_cast<double>(m))));
  const long batch_size = std::max(1L, m / batches);
  long used = batch_size * (m / batch_size);
  std::vector<double> sc_sum(k, 0.0), batch_acc(k, 0.0), batch_sq(k, 0.0);
  bool diverged = false;
  long used_done = 0;
  try {
    RngStream rng = root.derive({2});
    Dataset data;
    data.X.resize(config.n, config.p);
    for (Eigen::Index i = 0; i < config.n; ++i)
      for (Eigen::Index j = 0; j < config.p; ++j) data.X(i, j) = rng.normal();
    GibbsState state = draw_from_prior(config.hyper, config.n, config.p, rng);
    draw_response(data, state, rng);

    FullConditionalContext ctx{data, config.hyper, state, rng, config.theta_shape};
    for (long c = 0; c < used; ++c) {
      sweep(ctx);
      draw_response(data, state, rng);
      for (std::size_t f = 0; f < k; ++f) batch_acc[f] += functions[f].eval(state);
      if ((c + 1) % batch_size == 0) {
        for (std::size_t f = 0; f < k; ++f) {
          const double bm = batch_acc[f] / static_cast<double>(batch_size);
          sc_sum[f] += batch_acc[f];
          batch_sq[f] += bm * bm;
          batch_acc[f] = 0.0;
        }
      }
      if ((c + 1) % batch_size == 0) used_done = c + 1;
    }
  } catch (const Error&) {
    // A broken kernel can drive the chain out of the parameter space; keep
    // the complete batches before the failure.
    diverged = true;
  }
  used = used_done;
  const long n_batches = used / batch_size;

  GewekeResult out;
  out.completed_cycles = used;
  out.diverged = diverged;
  for (std::size_t f = 0; f < k; ++f) {
    const double mc_mean = mc_sum[f] / static_cast<double>(m);
    const double mc_var = std::max(0.0, mc_sq[f] / static_cast<double>(m) - mc_mean * mc_mean);
    const double sc_mean = used > 0 ? sc_sum[f] / static_cast<double>(used) : 0.0;
    // Batch-means estimate of Var(mean) for the autocorrelated chain.
    const double between =
        n_batches > 1 ? std::max(0.0, batch_sq[f] / static_cast<double>(n_batches) - sc_mean * sc_mean) *
                            static_cast<double>(n_batches) / static_cast<double>(n_batches - 1)
                      : 0.0;
    const double se2 =
        mc_var / static_cast<double>(m) + (n_batches > 1 ? between / static_cast<double>(n_batches) : 0.0);
    out.names.push_back(functions[f].name);
    out.marginal_means.push_back(mc_mean);
    out.successive_means.push_back(sc_mean);
    out.z_scores.push_back(se2 > 0.0 ? (mc_mean - sc_mean) / std::sqrt(se2) : 0.0);
  }
  return out;
}

}  // namespace rbreg::gibbs
