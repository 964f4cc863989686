#pragma once

#include <filesystem>
#include <optional>
#include <span>

#include <Eigen/Dense>

#include "rbreg/model.hpp"
#include "rbreg/rng.hpp"

namespace rbreg::gibbs {

// Residuals smaller than this are clamped before forming theta / |r|.
inline constexpr double kResidualClamp = 1e-10;
// Lower bound on the squared residuals used to initialize sigma^2.
inline constexpr double kInitialSigma2Floor = 1e-4;

// Everything one sweep needs; the state is updated in place.
struct FullConditionalContext {
  const Dataset& data;
  const PriorHyperparams& hyper;
  GibbsState& state;
  RngStream& rng;
  ThetaShapeRule theta_shape = ThetaShapeRule::joint;
};

// --- Conditional draws on plain arguments (usable with empty data) ---------

// theta^2 | sigma^2 ~ Gamma(shape, prior_rate + sum(sigma^2) / 2), where the
// shape is n + 1 (joint rule) or n / 2 + 1 (half_n), n = |sigma^2|.
double draw_theta2(std::span<const double> sigma2, double prior_rate, ThetaShapeRule rule,
                   RngStream& rng);

// sigma^{-2} ~ InverseGaussian(shape theta^2, mean theta / |r|); returns sigma^2.
double draw_sigma2(double residual, double theta2, RngStream& rng);

// P(t_j = large | beta_j, phi/p, delta_1^2, delta_2^2), evaluated in log space.
double large_component_probability(double beta_j, double phi_frac, double delta1_sq,
                                   double delta2_sq);

// Inverse-gamma conditional of one component variance from its members' sum of squares.
double draw_delta2(double alpha, double gamma, Eigen::Index members, double sum_sq,
                   RngStream& rng);

double draw_phi_frac(double alpha_phi, double gamma_phi, Eigen::Index n_large,
                     Eigen::Index n_small, RngStream& rng);

// Precision A = X^T Gamma^{-1} X + V^{-1} and shift c = X^T Gamma^{-1} Y of the
// beta full conditional N(A^{-1} c, A^{-1}). Only the lower triangle of A is filled.
void beta_conditional(const Dataset& data, const GibbsState& state, Eigen::MatrixXd& precision,
                      Eigen::VectorXd& shift);

// --- Full-conditional updates on the shared context ------------------------

void update_theta2(FullConditionalContext& ctx);
void update_sigma2(FullConditionalContext& ctx);
void update_beta(FullConditionalContext& ctx);
void update_t(FullConditionalContext& ctx);
void update_delta2(FullConditionalContext& ctx);
void update_phi(FullConditionalContext& ctx);

// One sweep in the fixed order theta^2, sigma^2, beta, T, delta^2, phi.
void sweep(FullConditionalContext& ctx);

// Starting point: ridge beta, clamped squared residuals for sigma^2, theta^2 = 1,
// delta's and phi/p at their prior means, and the ceil(E phi) largest |beta_j|
// labelled large.
GibbsState initial_state(const Dataset& data, const PriorHyperparams& hyper);

struct ChainOptions {
  // Write a checkpoint every `checkpoint_every` sweeps (0 disables).
  std::optional<std::filesystem::path> checkpoint_path;
  int checkpoint_every = 0;
  // One CSV row per retained draw.
  std::optional<std::filesystem::path> draw_log_path;
};

struct Checkpoint;

PosteriorDraws run_chain(const Dataset& data, const PriorHyperparams& hyper,
                         const GibbsConfig& config, const ChainOptions& options = {});

// Continues a chain from a checkpoint written by run_chain with the same data
// and hyperparameters; the result is identical to an uninterrupted run.
PosteriorDraws resume_chain(const Dataset& data, const PriorHyperparams& hyper,
                            const Checkpoint& checkpoint, const ChainOptions& options = {});

}  // namespace rbreg::gibbs
