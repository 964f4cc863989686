#include "rbreg/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "rbreg/checkpoint.hpp"
#include "rbreg/distributions.hpp"
#include "rbreg/errors.hpp"

namespace rbreg::gibbs {

double draw_theta2(std::span<const double> sigma2, double prior_rate, ThetaShapeRule rule,
                   RngStream& rng) {
  const double n = static_cast<double>(sigma2.size());
  const double sum = std::accumulate(sigma2.begin(), sigma2.end(), 0.0);
  // theta^2 enters each mixing density (theta^2/2) exp(-theta^2 sigma^2 / 2)
  // once, hence n + 1 under the Exp(prior_rate) prior.
  const double shape = rule == ThetaShapeRule::joint ? n + 1.0 : 0.5 * n + 1.0;
  return dist::sample_gamma(shape, prior_rate + 0.5 * sum, rng);
}

double draw_sigma2(double residual, double theta2, RngStream& rng) {
  const double theta = std::sqrt(theta2);
  const double r = std::max(std::abs(residual), kResidualClamp);
  const double precision = dist::sample_inverse_gaussian({theta2, theta / r}, rng);
  return 1.0 / precision;
}

double large_component_probability(double beta_j, double phi_frac, double delta1_sq,
                                   double delta2_sq) {
  const double b2 = beta_j * beta_j;
  const double log_w1 = std::log(phi_frac) - 0.5 * std::log(delta1_sq) - 0.5 * b2 / delta1_sq;
  const double log_w2 =
      std::log1p(-phi_frac) - 0.5 * std::log(delta2_sq) - 0.5 * b2 / delta2_sq;
  return 1.0 / (1.0 + std::exp(log_w2 - log_w1));
}

double draw_delta2(double alpha, double gamma, Eigen::Index members, double sum_sq,
                   RngStream& rng) {
  return dist::sample_inverse_gamma(alpha + 0.5 * static_cast<double>(members),
                                    gamma + 0.5 * sum_sq, rng);
}

double draw_phi_frac(double alpha_phi, double gamma_phi, Eigen::Index n_large,
                     Eigen::Index n_small, RngStream& rng) {
  const double phi = dist::sample_beta(alpha_phi + static_cast<double>(n_large),
                                       gamma_phi + static_cast<double>(n_small), rng);
  // Keep the state strictly inside (0, 1) when a Beta draw rounds to an endpoint.
  return std::clamp(phi, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

void beta_conditional(const Dataset& data, const GibbsState& state, Eigen::MatrixXd& precision,
                      Eigen::VectorXd& shift) {
  const Eigen::Index p = data.p();
  const Eigen::VectorXd inv_sigma2 = state.sigma2.cwiseInverse();
  const Eigen::MatrixXd weighted = inv_sigma2.cwiseSqrt().asDiagonal() * data.X;

  precision.setZero(p, p);
  precision.selfadjointView<Eigen::Lower>().rankUpdate(weighted.transpose());
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto k = static_cast<std::size_t>(j);
    precision(j, j) +=
        1.0 / (state.labels[k] == Component::large ? state.delta1_sq : state.delta2_sq);
  }
  shift.noalias() = data.X.transpose() * inv_sigma2.cwiseProduct(data.Y);
}

void update_theta2(FullConditionalContext& ctx) {
  const auto& s2 = ctx.state.sigma2;
  ctx.state.theta2 = draw_theta2(std::span<const double>(s2.data(), static_cast<std::size_t>(s2.size())),
                                 ctx.hyper.theta2_rate, ctx.theta_shape, ctx.rng);
}

void update_sigma2(FullConditionalContext& ctx) {
  const Eigen::VectorXd residual = ctx.data.Y - ctx.data.X * ctx.state.beta;
  for (Eigen::Index i = 0; i < residual.size(); ++i)
    ctx.state.sigma2[i] = draw_sigma2(residual[i], ctx.state.theta2, ctx.rng);
}

void update_beta(FullConditionalContext& ctx) {
  Eigen::MatrixXd precision;
  Eigen::VectorXd shift;
  beta_conditional(ctx.data, ctx.state, precision, shift);
  ctx.state.beta = dist::sample_mvn_precision(precision, shift, ctx.rng);
}

void update_t(FullConditionalContext& ctx) {
  auto& s = ctx.state;
  for (Eigen::Index j = 0; j < s.beta.size(); ++j) {
    const double p1 = large_component_probability(s.beta[j], s.phi_frac, s.delta1_sq, s.delta2_sq);
    s.labels[static_cast<std::size_t>(j)] =
        ctx.rng.uniform() < p1 ? Component::large : Component::small;
  }
}

void update_delta2(FullConditionalContext& ctx) {
  auto& s = ctx.state;
  Eigen::Index n_large = 0;
  double ss_large = 0.0;
  double ss_small = 0.0;
  for (Eigen::Index j = 0; j < s.beta.size(); ++j) {
    const double b2 = s.beta[j] * s.beta[j];
    if (s.labels[static_cast<std::size_t>(j)] == Component::large) {
      ++n_large;
      ss_large += b2;
    } else {
      ss_small += b2;
    }
  }
  const Eigen::Index n_small = s.beta.size() - n_large;
  s.delta1_sq = draw_delta2(ctx.hyper.alpha1, ctx.hyper.gamma1, n_large, ss_large, ctx.rng);
  s.delta2_sq = draw_delta2(ctx.hyper.alpha2, ctx.hyper.gamma2, n_small, ss_small, ctx.rng);
}

void update_phi(FullConditionalContext& ctx) {
  auto& s = ctx.state;
  const Eigen::Index n_large = s.large_count();
  s.phi_frac = draw_phi_frac(ctx.hyper.alpha_phi, ctx.hyper.gamma_phi, n_large,
                             s.beta.size() - n_large, ctx.rng);
}

void sweep(FullConditionalContext& ctx) {
  update_theta2(ctx);
  update_sigma2(ctx);
  update_beta(ctx);
  update_t(ctx);
  update_delta2(ctx);
  update_phi(ctx);
}

namespace {

double finite_prior_mean(double alpha, double gamma) {
  // Fall back to the mode when the mean does not exist.
  return alpha > 1.0 ? gamma / (alpha - 1.0) : gamma / (alpha + 1.0);
}

}  // namespace

GibbsState initial_state(const Dataset& data, const PriorHyperparams& hyper) {
  const Eigen::Index p = data.p();
  GibbsState s;
  Eigen::MatrixXd gram = data.X.transpose() * data.X;
  gram.diagonal().array() += 1.0;
  s.beta = gram.llt().solve(data.X.transpose() * data.Y);
  s.sigma2 = (data.Y - data.X * s.beta).array().square().max(kInitialSigma2Floor).matrix();
  s.theta2 = 1.0;
  s.delta1_sq = finite_prior_mean(hyper.alpha1, hyper.gamma1);
  s.delta2_sq = finite_prior_mean(hyper.alpha2, hyper.gamma2);
  s.phi_frac = hyper.mean_phi_frac();

  const auto n_large = std::clamp<Eigen::Index>(
      static_cast<Eigen::Index>(std::ceil(static_cast<double>(p) * s.phi_frac)), 0, p);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(s.beta[a]) > std::abs(s.beta[b]);
  });
  s.labels.assign(static_cast<std::size_t>(p), Component::small);
  for (Eigen::Index k = 0; k < n_large; ++k)
    s.labels[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = Component::large;
  return s;
}

namespace {

void write_draw_header(std::ostream& os, Eigen::Index p) {
  os << "iteration,theta2,delta1_sq,delta2_sq,phi_frac,n_large";
  for (Eigen::Index j = 1; j <= p; ++j) os << ",beta" << j;
  os << '\n';
}

void write_draw_row(std::ostream& os, int iteration, const GibbsState& s) {
  os.precision(17);
  os << iteration << ',' << s.theta2 << ',' << s.delta1_sq << ',' << s.delta2_sq << ','
     << s.phi_frac << ',' << s.large_count();
  for (Eigen::Index j = 0; j < s.beta.size(); ++j) os << ',' << s.beta[j];
  os << '\n';
}

bool is_retained(const GibbsConfig& c, int iteration) {
  return iteration > c.burn_in && (iteration - c.burn_in) % c.thinning == 0;
}

PosteriorDraws continue_chain(const Dataset& data, const PriorHyperparams& hyper,
                              const GibbsConfig& config, int completed, GibbsState state,
                              RngStream rng, std::vector<GibbsState> retained,
                              const ChainOptions& options) {
  std::ofstream draw_log;
  if (options.draw_log_path) {
    draw_log.open(*options.draw_log_path, std::ios::trunc);
    if (!draw_log) throw IoError("cannot open draw log " + options.draw_log_path->string());
    write_draw_header(draw_log, data.p());
    // On resume, replay the draws already retained so the log is complete.
    for (std::size_t k = 0; k < retained.size(); ++k)
      write_draw_row(draw_log, config.burn_in + static_cast<int>(k + 1) * config.thinning,
                     retained[k]);
  }

  retained.reserve(static_cast<std::size_t>(config.retained_count()));
  FullConditionalContext ctx{data, hyper, state, rng, config.theta_shape};
  for (int it = completed + 1; it <= config.total_iterations; ++it) {
    try {
      sweep(ctx);
      state.check_invariants();
    } catch (const Error& e) {
      throw ChainError("sweep " + std::to_string(it) + " failed: " + e.what(), it);
    }
    if (is_retained(config, it)) {
      retained.push_back(state);
      if (draw_log.is_open()) write_draw_row(draw_log, it, state);
    }
    if (options.checkpoint_path && options.checkpoint_every > 0 &&
        it % options.checkpoint_every == 0 && it < config.total_iterations) {
      Checkpoint cp{config, hyper, it, rng.save_state(), state, retained};
      save_checkpoint(*options.checkpoint_path, cp);
    }
  }
  return PosteriorDraws{std::move(retained)};
}

}  // namespace

PosteriorDraws run_chain(const Dataset& data, const PriorHyperparams& hyper,
                         const GibbsConfig& config, const ChainOptions& options) {
  data.validate();
  hyper.validate();
  config.validate();
  return continue_chain(data, hyper, config, 0, initial_state(data, hyper),
                        RngStream(config.seed, config.stream), {}, options);
}

PosteriorDraws resume_chain(const Dataset& data, const PriorHyperparams& hyper,
                            const Checkpoint& checkpoint, const ChainOptions& options) {
  data.validate();
  hyper.validate();
  checkpoint.config.validate();
  if (checkpoint.state.beta.size() != data.p() || checkpoint.state.sigma2.size() != data.n())
    throw DimensionError("checkpoint state does not match the dataset dimensions");
  RngStream rng;
  rng.restore_state(checkpoint.rng_state);
  return continue_chain(data, hyper, checkpoint.config, checkpoint.completed_iterations,
                        checkpoint.state, rng, checkpoint.retained, options);
}

}  // namespace rbreg::gibbs
