#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rbreg/model.hpp"
#include "rbreg/rng.hpp"

// Frequentist comparison estimators. Every objective is the plain sum
//   f(beta) = sum_i rho(Y_i - X_i^T beta) + P_lambda(beta)
// with rho(x) = x^2 or |x| and P_lambda = 0, lambda |beta|_1 or lambda |beta|^2.
namespace rbreg::freq {

enum class Loss { squared, absolute };
enum class Penalty { none, l1, l2 };

struct PenaltySpec {
  Loss loss = Loss::squared;
  Penalty penalty = Penalty::none;
  // Empty means "choose by cross-validation".
  std::optional<double> lambda;
};

struct SolverOptions {
  // Coordinate descent (squared loss + l1): stop when the largest coordinate
  // change of a sweep is below this.
  double cd_tolerance = 1e-7;
  int cd_max_sweeps = 100000;
  // ADMM (absolute loss): initial penalty parameter, iteration cap and
  // absolute/relative primal-dual tolerance.
  double admm_rho = 1.0;
  int admm_max_iterations = 2000;
  double admm_tolerance = 1e-6;
  // Active-set refinement of the final iterate.
  bool polish = true;
};

struct FitResult {
  Eigen::VectorXd beta;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  // Objective after each outer iteration (coordinate-descent sweeps only).
  std::vector<double> objective_trace;
};

double objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y, const Eigen::VectorXd& beta,
                 Loss loss, Penalty penalty, double lambda);

// Normal-equations solution via column-pivoted QR; SingularDesignError if X is
// rank deficient.
Eigen::VectorXd fit_ls(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y);
Eigen::VectorXd fit_ls(const Dataset& data);

// Least absolute deviations; ConvergenceError when ADMM stalls and the
// refined point cannot be certified optimal.
Eigen::VectorXd fit_lad(const Dataset& data, const SolverOptions& options = {});

// Explicit-lambda fit of any loss/penalty pair.
FitResult solve(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y, Loss loss, Penalty penalty,
                double lambda, const SolverOptions& options = {});
Eigen::VectorXd fit_penalized(const Dataset& data, const PenaltySpec& spec,
                              const SolverOptions& options = {});

// Largest violation of 0 in the subdifferential of an absolute-loss objective
// at beta. Observations with |r_i| <= zero_tol contribute any value in [-1, 1];
// the best such choice is found by least squares and clipped.
double absolute_loss_optimality_gap(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
                                    const Eigen::VectorXd& beta, Penalty penalty, double lambda,
                                    double zero_tol = 1e-9);

struct CvConfig {
  int folds = 5;
  int grid_size = 50;
  double min_ratio = 1e-4;
  // Explicit grid (strictly descending). Overrides grid_size/min_ratio when set.
  std::vector<double> grid;

  void validate() const;
};

struct CvResult {
  double lambda = 0.0;
  Eigen::VectorXd beta;
  std::vector<double> grid;
  std::vector<double> cv_loss;  // mean held-out loss per grid point
  std::size_t selected_index = 0;
};

// Top of the automatic grid: the smallest lambda that zeroes every coordinate
// for l1, and 1000 times the sup-norm of the loss gradient at zero for l2.
double lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y, Loss loss, Penalty penalty);
std::vector<double> lambda_grid(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y, Loss loss,
                                Penalty penalty, const CvConfig& cv);

// K-fold selection of lambda by mean held-out loss (same loss as the fit),
// ties going to the smallest lambda, then a refit on all data.
CvResult cross_validate(const Dataset& data, const PenaltySpec& spec, const CvConfig& cv,
                        RngStream& rng, const SolverOptions& options = {});

}  // namespace rbreg::freq
