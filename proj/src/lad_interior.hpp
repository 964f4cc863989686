#pragma once

#include <Eigen/Dense>

namespace rbreg::freq::detail {

// Minimizes sum |Y - X beta| with a Mehrotra predictor-corrector method on
// the bounded dual  max Y'a  s.t.  X'a = X'1/2, 0 <= a <= 1.  Returns beta
// after `max_iterations` or once the duality gap falls below `gap_tol`
// relative to the objective.
Eigen::VectorXd lad_interior_point(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
                                   int max_iterations = 100, double gap_tol = 1e-12);

// The basic solution through the p rows with the smallest absolute residual
// at beta; NaN entries when those rows are singular.
Eigen::VectorXd lad_vertex(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y, const Eigen::VectorXd& beta);

// Minimizes sum |Y - X beta| + lambda |beta|^2 by cyclic coordinate ascent on
// the box-constrained dual  max Y'a - |X'a|^2 / (4 lambda),  |a_i| <= 1,
// started from the residual signs at beta0, then solves exactly on the face
// of the box the ascent settled on.
Eigen::VectorXd lad_ridge_dual(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y, double lambda,
                               const Eigen::VectorXd& beta0, int max_sweeps = 20000);

}  // namespace rbreg::freq::detail
