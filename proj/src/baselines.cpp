#include "rbreg/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "rbreg/errors.hpp"
#include "lad_interior.hpp"

namespace rbreg::freq {

namespace {

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& x, double t) {
  return x.unaryExpr([t](double v) { return soft_threshold(v, t); });
}

double sign(double x) { return (x > 0.0) - (x < 0.0); }

double penalty_value(const Eigen::VectorXd& beta, Penalty penalty, double lambda) {
  switch (penalty) {
    case Penalty::none: return 0.0;
    case Penalty::l1: return lambda * beta.lpNorm<1>();
    case Penalty::l2: return lambda * beta.squaredNorm();
  }
  return 0.0;
}

void check_shapes(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y) {
  if (X.rows() != Y.size()) throw DimensionError("X rows and Y length differ");
  if (X.cols() < 1) throw DimensionError("design has no columns");
}

void check_lambda(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw DomainError("penalty weight lambda must be finite and non-negative");
}

// ---------------------------------------------------------------------------
// Squared loss + l1: cyclic coordinate descent on the covariance form
//   f = Y'Y - 2 c'beta + beta' G beta + lambda |beta|_1,  G = X'X, c = X'Y.
class SquaredL1Solver {
 public:
  SquaredL1Solver(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y)
      : gram_(X.transpose() * X), xty_(X.transpose() * Y), yty_(Y.squaredNorm()) {}

  FitResult solve(double lambda, const SolverOptions& opt, const Eigen::VectorXd* warm) const {
    const Eigen::Index p = gram_.cols();
    FitResult res;
    res.beta = warm ? *warm : Eigen::VectorXd::Zero(p);
    Eigen::VectorXd grad = xty_ - gram_ * res.beta;  // X'r
    double prev = value(res.beta, grad, lambda);
    const double half = 0.5 * lambda;

    for (int sweep = 1; sweep <= opt.cd_max_sweeps; ++sweep) {
      double max_change = 0.0;
      for (Eigen::Index j = 0; j < p; ++j) {
        const double gjj = gram_(j, j);
        if (gjj <= 0.0) continue;
        const double updated = soft_threshold(grad[j] + gjj * res.beta[j], half) / gjj;
        const double delta = updated - res.beta[j];
        if (delta == 0.0) continue;
        grad.noalias() -= gram_.col(j) * delta;
        res.beta[j] = updated;
        max_change = std::max(max_change, std::abs(delta));
      }
      const double current = value(res.beta, grad, lambda);
      res.objective_trace.push_back(current);
      if (current > prev + 1e-10 * (std::abs(prev) + 1.0)) {
        std::ostringstream os;
        os << "coordinate descent objective increased at sweep " << sweep << ": " << prev
           << " -> " << current;
        throw ConvergenceError(os.str(), current, sweep);
      }
      prev = current;
      res.iterations = sweep;
      if (max_change < opt.cd_tolerance) {
        res.converged = true;
        break;
      }
    }
    if (opt.polish) polish(res, lambda);
    res.objective = value(res.beta, xty_ - gram_ * res.beta, lambda);
    return res;
  }

 private:
  double value(const Eigen::VectorXd& beta, const Eigen::VectorXd& grad, double lambda) const {
    return yty_ - xty_.dot(beta) - grad.dot(beta) + lambda * beta.lpNorm<1>();
  }

  // Exact solve on the active set with the signs fixed; kept only when the
  // signs and the inactive-coordinate KKT conditions survive.
  void polish(FitResult& res, double lambda) const {
    std::vector<Eigen::Index> active;
    for (Eigen::Index j = 0; j < res.beta.size(); ++j)
      if (res.beta[j] != 0.0) active.push_back(j);
    if (active.empty()) return;
    const auto m = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd g_aa(m, m);
    Eigen::VectorXd rhs(m);
    for (Eigen::Index a = 0; a < m; ++a) {
      const Eigen::Index j = active[static_cast<std::size_t>(a)];
      rhs[a] = xty_[j] - 0.5 * lambda * sign(res.beta[j]);
      for (Eigen::Index b = 0; b < m; ++b) g_aa(a, b) = gram_(j, active[static_cast<std::size_t>(b)]);
    }
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(g_aa);
    if (ldlt.info() != Eigen::Success) return;
    const Eigen::VectorXd sol = ldlt.solve(rhs);
    if (!sol.allFinite()) return;

    Eigen::VectorXd candidate = Eigen::VectorXd::Zero(res.beta.size());
    for (Eigen::Index a = 0; a < m; ++a) {
      const Eigen::Index j = active[static_cast<std::size_t>(a)];
      if (sign(sol[a]) != sign(res.beta[j])) return;
      candidate[j] = sol[a];
    }
    const Eigen::VectorXd grad = xty_ - gram_ * candidate;
    const double slack = 1e-12 * (xty_.lpNorm<Eigen::Infinity>() + 1.0);
    for (Eigen::Index j = 0; j < candidate.size(); ++j)
      if (candidate[j] == 0.0 && std::abs(grad[j]) > 0.5 * lambda + slack) return;
    const Eigen::VectorXd old_grad = xty_ - gram_ * res.beta;
    if (value(candidate, grad, lambda) <= value(res.beta, old_grad, lambda) + 1e-12 * (std::abs(yty_) + 1.0))
      res.beta = candidate;
  }

  Eigen::MatrixXd gram_;
  Eigen::VectorXd xty_;
  double yty_;
};

// ---------------------------------------------------------------------------
// Squared loss + l2 along a grid: one eigendecomposition of X'X.
class RidgePath {
 public:
  RidgePath(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(X.transpose() * X);
    basis_ = eig.eigenvectors();
    values_ = eig.eigenvalues().cwiseMax(0.0);
    rotated_ = basis_.transpose() * (X.transpose() * Y);
  }

  Eigen::VectorXd solve(double lambda) const {
    return basis_ * (rotated_.array() / (values_.array() + lambda)).matrix();
  }

 private:
  Eigen::MatrixXd basis_;
  Eigen::VectorXd values_;
  Eigen::VectorXd rotated_;
};

// ---------------------------------------------------------------------------
// Absolute loss: ADMM on X beta + z = Y (and beta = w for l1) in scaled form.
// X'X is diagonalized once, so rho can be rebalanced at no refactorization cost.
struct AdmmState {
  Eigen::VectorXd beta, z, w, u, v;
  double rho = 1.0;
  bool initialized = false;
};

class AbsoluteLossSolver {
 public:
  AbsoluteLossSolver(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y) : X_(X), Y_(Y) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(X.transpose() * X);
    basis_ = eig.eigenvectors();
    values_ = eig.eigenvalues().cwiseMax(0.0);
  }

  FitResult solve(Penalty penalty, double lambda, const SolverOptions& opt, AdmmState& st) const {
    const Eigen::Index n = X_.rows();
    const Eigen::Index p = X_.cols();
    if (lambda == 0.0) penalty = Penalty::none;
    if (penalty == Penalty::none && values_.minCoeff() <= 1e-12 * std::max(values_.maxCoeff(), 1.0))
      throw SingularDesignError("design matrix is rank deficient");
    const bool split = penalty == Penalty::l1;

    if (!st.initialized) {
      st.beta = Eigen::VectorXd::Zero(p);
      st.z = Y_;
      st.u = Eigen::VectorXd::Zero(n);
      st.w = Eigen::VectorXd::Zero(p);
      st.v = Eigen::VectorXd::Zero(p);
      st.rho = opt.admm_rho;
      st.initialized = true;
    }

    FitResult res;
    Eigen::VectorXd best = split ? st.w : st.beta;
    double best_obj = objective(X_, Y_, best, Loss::absolute, penalty, lambda);
    Eigen::VectorXd xb(n), z_old(n), w_old(p);
    const double y_norm = Y_.norm();
    const int check_every = 10;

    for (int it = 1; it <= opt.admm_max_iterations; ++it) {
      Eigen::VectorXd rhs = st.rho * (X_.transpose() * (Y_ - st.z - st.u));
      double diag = 0.0;
      if (penalty == Penalty::l1) {
        rhs += st.rho * (st.w - st.v);
        diag = st.rho;
      } else if (penalty == Penalty::l2) {
        diag = 2.0 * lambda;
      }
      st.beta = basis_ * ((basis_.transpose() * rhs).array() / (st.rho * values_.array() + diag)).matrix();
      xb.noalias() = X_ * st.beta;

      z_old = st.z;
      st.z = soft_threshold(Y_ - xb - st.u, 1.0 / st.rho);
      if (split) {
        w_old = st.w;
        st.w = soft_threshold(st.beta + st.v, lambda / st.rho);
      }
      st.u += xb + st.z - Y_;
      if (split) st.v += st.beta - st.w;
      res.iterations = it;

      if (it % check_every != 0 && it != opt.admm_max_iterations) continue;

      const Eigen::VectorXd& point = split ? st.w : st.beta;
      const double obj = objective(X_, Y_, point, Loss::absolute, penalty, lambda);
      if (obj < best_obj) {
        best_obj = obj;
        best = point;
      }

      double primal_sq = (xb + st.z - Y_).squaredNorm();
      Eigen::VectorXd dual_vec = X_.transpose() * (st.z - z_old);
      Eigen::VectorXd scaled_dual = X_.transpose() * st.u;
      double primal_scale = std::max({xb.norm(), st.z.norm(), y_norm});
      if (split) {
        primal_sq += (st.beta - st.w).squaredNorm();
        dual_vec -= st.w - w_old;
        scaled_dual += st.v;
        primal_scale = std::max({primal_scale, st.beta.norm(), st.w.norm()});
      }
      const double primal = std::sqrt(primal_sq);
      const double dual = st.rho * dual_vec.norm();
      const double m = static_cast<double>(n + (split ? p : 0));
      const double eps_pri = std::sqrt(m) * opt.admm_tolerance + opt.admm_tolerance * primal_scale;
      const double eps_dual = std::sqrt(static_cast<double>(p)) * opt.admm_tolerance +
                              opt.admm_tolerance * st.rho * scaled_dual.norm();
      if (primal < eps_pri && dual < eps_dual) {
        res.converged = true;
        break;
      }
      // Residual balancing; the scaled duals follow 1/rho.
      if (primal > 10.0 * dual) {
        st.rho *= 2.0;
        st.u /= 2.0;
        st.v /= 2.0;
      } else if (dual > 10.0 * primal) {
        st.rho /= 2.0;
        st.u *= 2.0;
        st.v *= 2.0;
      }
    }

    const Eigen::VectorXd& last = split ? st.w : st.beta;
    const double last_obj = objective(X_, Y_, last, Loss::absolute, penalty, lambda);
    if (last_obj <= best_obj) {
      best = last;
      best_obj = last_obj;
    }
    res.beta = best;
    res.objective = best_obj;
    if (opt.polish) polish(res, penalty, lambda, st.z);
    return res;
  }

 private:
  void consider(FitResult& res, const Eigen::VectorXd& candidate, Penalty penalty, double lambda) const {
    if (!candidate.allFinite()) return;
    const double obj = objective(X_, Y_, candidate, Loss::absolute, penalty, lambda);
    if (obj < res.objective) {
      res.objective = obj;
      res.beta = candidate;
    }
  }

  // Interpolating solve on the active coordinates through rows `rows`.
  Eigen::VectorXd vertex(const std::vector<Eigen::Index>& rows,
                         const std::vector<Eigen::Index>& active) const {
    const auto m = static_cast<Eigen::Index>(rows.size());
    const auto k = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd sub(m, k);
    Eigen::VectorXd rhs(m);
    for (Eigen::Index a = 0; a < m; ++a) {
      rhs[a] = Y_[rows[static_cast<std::size_t>(a)]];
      for (Eigen::Index b = 0; b < k; ++b)
        sub(a, b) = X_(rows[static_cast<std::size_t>(a)], active[static_cast<std::size_t>(b)]);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sub);
    Eigen::VectorXd full = Eigen::VectorXd::Constant(X_.cols(), std::numeric_limits<double>::quiet_NaN());
    if (qr.rank() < k) return full;
    const Eigen::VectorXd sol = qr.solve(rhs);
    full.setZero();
    for (Eigen::Index b = 0; b < k; ++b) full[active[static_cast<std::size_t>(b)]] = sol[b];
    return full;
  }

  std::vector<Eigen::Index> smallest_residuals(const Eigen::VectorXd& beta, std::size_t count) const {
    const Eigen::VectorXd r = (Y_ - X_ * beta).cwiseAbs();
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(r.size()));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    count = std::min(count, idx.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(count), idx.end(),
                      [&](Eigen::Index a, Eigen::Index b) { return r[a] < r[b]; });
    idx.resize(count);
    return idx;
  }

  void polish(FitResult& res, Penalty penalty, double lambda, const Eigen::VectorXd& admm_z) const {
    std::vector<Eigen::Index> zero_rows;
    for (Eigen::Index i = 0; i < admm_z.size(); ++i)
      if (admm_z[i] == 0.0) zero_rows.push_back(i);

    if (penalty == Penalty::l2) {
      polish_ridge(res, lambda, zero_rows);
      return;
    }
    // Piecewise-linear objective: an optimum sits at a vertex where the
    // residuals vanish on as many rows as there are active coordinates.
    for (int round = 0; round < 3; ++round) {
      std::vector<Eigen::Index> active;
      for (Eigen::Index j = 0; j < res.beta.size(); ++j)
        if (penalty == Penalty::none || res.beta[j] != 0.0) active.push_back(j);
      if (active.empty()) return;
      const Eigen::VectorXd before = res.beta;
      if (round == 0 && zero_rows.size() >= active.size()) consider(res, vertex(zero_rows, active), penalty, lambda);
      consider(res, vertex(smallest_residuals(res.beta, active.size()), active), penalty, lambda);
      if (res.beta == before) return;
    }
  }

  // Stationarity 2 lambda beta = X' nu with nu_i = sign(r_i) off the
  // zero-residual rows and r = 0 on them: a linear system for nu on those rows.
  void polish_ridge(FitResult& res, double lambda, std::vector<Eigen::Index> zero_rows) const {
    const Eigen::Index n = X_.rows();
    for (int round = 0; round < 3; ++round) {
      const Eigen::VectorXd r = Y_ - X_ * res.beta;
      if (round > 0 || zero_rows.empty()) {
        zero_rows.clear();
        const double tol = 1e-7 * (1.0 + Y_.lpNorm<Eigen::Infinity>());
        for (Eigen::Index i = 0; i < n; ++i)
          if (std::abs(r[i]) <= tol) zero_rows.push_back(i);
      }
      if (zero_rows.empty()) return;
      std::vector<char> is_zero(static_cast<std::size_t>(n), 0);
      for (auto i : zero_rows) is_zero[static_cast<std::size_t>(i)] = 1;
      Eigen::VectorXd nu = Eigen::VectorXd::Zero(n);
      for (Eigen::Index i = 0; i < n; ++i)
        if (!is_zero[static_cast<std::size_t>(i)]) nu[i] = sign(r[i]);

      const auto m = static_cast<Eigen::Index>(zero_rows.size());
      Eigen::MatrixXd xz(m, X_.cols());
      Eigen::VectorXd yz(m);
      for (Eigen::Index a = 0; a < m; ++a) {
        xz.row(a) = X_.row(zero_rows[static_cast<std::size_t>(a)]);
        yz[a] = Y_[zero_rows[static_cast<std::size_t>(a)]];
      }
      const Eigen::VectorXd fixed_part = X_.transpose() * nu;
      const Eigen::MatrixXd lhs = xz * xz.transpose();
      const Eigen::VectorXd rhs = 2.0 * lambda * yz - xz * fixed_part;
      const Eigen::VectorXd nu_z = lhs.completeOrthogonalDecomposition().solve(rhs);
      for (Eigen::Index a = 0; a < m; ++a) nu[zero_rows[static_cast<std::size_t>(a)]] = nu_z[a];
      const Eigen::VectorXd before = res.beta;
      consider(res, X_.transpose() * nu / (2.0 * lambda), Penalty::l2, lambda);
      if (res.beta == before) return;
    }
  }

  const Eigen::MatrixXd& X_;
  const Eigen::VectorXd& Y_;
  Eigen::MatrixXd basis_;
  Eigen::VectorXd values_;
};

// Regularization path for one loss/penalty pair over a descending grid.
std::vector<Eigen::VectorXd> fit_path(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y, Loss loss,
                                      Penalty penalty, const std::vector<double>& grid,
                                      const SolverOptions& opt) {
  std::vector<Eigen::VectorXd> path;
  path.reserve(grid.size());
  if (loss == Loss::squared && penalty == Penalty::l1) {
    const SquaredL1Solver cd(X, Y);
    Eigen::VectorXd warm = Eigen::VectorXd::Zero(X.cols());
    for (double lambda : grid) {
      warm = cd.solve(lambda, opt, &warm).beta;
      path.push_back(warm);
    }
  } else if (loss == Loss::squared) {
    const RidgePath ridge(X, Y);
    for (double lambda : grid) path.push_back(ridge.solve(lambda));
  } else {
    const AbsoluteLossSolver admm(X, Y);
    AdmmState state;
    for (double lambda : grid) path.push_back(admm.solve(penalty, lambda, opt, state).beta);
  }
  return path;
}

}  // namespace

double objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y, const Eigen::VectorXd& beta,
                 Loss loss, Penalty penalty, double lambda) {
  const Eigen::VectorXd r = Y - X * beta;
  const double data_term = loss == Loss::squared ? r.squaredNorm() : r.lpNorm<1>();
  return data_term + penalty_value(beta, penalty, lambda);
}

Eigen::VectorXd fit_ls(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y) {
  check_shapes(X, Y);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < X.cols()) {
    std::ostringstream os;
    os << "design has rank " << qr.rank() << " < p = " << X.cols();
    throw SingularDesignError(os.str());
  }
  return qr.solve(Y);
}

Eigen::VectorXd fit_ls(const Dataset& data) { return fit_ls(data.X, data.Y); }

FitResult solve(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y, Loss loss, Penalty penalty,
                double lambda, const SolverOptions& opt) {
  check_shapes(X, Y);
  check_lambda(lambda);
  if (penalty == Penalty::none || lambda == 0.0) {
    penalty = Penalty::none;
    lambda = 0.0;
  }

  FitResult res;
  if (loss == Loss::squared) {
    if (penalty == Penalty::none) {
      res.beta = fit_ls(X, Y);
      res.converged = true;
    } else if (penalty == Penalty::l2) {
      Eigen::MatrixXd lhs = X.transpose() * X;
      lhs.diagonal().array() += lambda;
      res.beta = lhs.llt().solve(X.transpose() * Y);
      res.converged = true;
    } else {
      return SquaredL1Solver(X, Y).solve(lambda, opt, nullptr);
    }
    res.objective = objective(X, Y, res.beta, loss, penalty, lambda);
    return res;
  }

  AdmmState state;
  res = AbsoluteLossSolver(X, Y).solve(penalty, lambda, opt, state);
  if (res.converged) return res;
  // Accept an ADMM run that hit the cap when its refined point is optimal;
  // otherwise ridge goes to dual coordinate ascent and the piecewise-linear
  // cases go to the interior-point LP.
  const double tol = 1e-6 * (1.0 + lambda);
  if (absolute_loss_optimality_gap(X, Y, res.beta, penalty, lambda) <= tol) {
    res.converged = true;
    return res;
  }
  if (penalty == Penalty::l2) {
    const Eigen::VectorXd candidate = detail::lad_ridge_dual(X, Y, lambda, res.beta);
    if (candidate.allFinite() && absolute_loss_optimality_gap(X, Y, candidate, penalty, lambda) <= tol) {
      res.objective = objective(X, Y, candidate, Loss::absolute, penalty, lambda);
      res.beta = candidate;
      res.converged = true;
    }
    return res;
  }
  Eigen::MatrixXd Xa = X;
  Eigen::VectorXd Ya = Y;
  if (penalty == Penalty::l1) {
    const Eigen::Index n = X.rows(), p = X.cols();
    Xa.conservativeResize(n + p, Eigen::NoChange);
    Xa.bottomRows(p) = lambda * Eigen::MatrixXd::Identity(p, p);
    Ya.conservativeResize(n + p);
    Ya.tail(p).setZero();
  }
  const Eigen::VectorXd interior = detail::lad_interior_point(Xa, Ya);
  // The vertex solve leaves roundoff where a penalty row is interpolated.
  const Eigen::VectorXd vertex = detail::lad_vertex(Xa, Ya, interior);
  Eigen::VectorXd snapped = vertex;
  if (snapped.allFinite()) {
    const double floor = 1e-12 * (1.0 + snapped.lpNorm<Eigen::Infinity>());
    for (Eigen::Index j = 0; j < snapped.size(); ++j)
      if (std::abs(snapped[j]) <= floor) snapped[j] = 0.0;
  }
  // A certified candidate wins outright; the objectives can tie to rounding.
  for (const Eigen::VectorXd& candidate : {snapped, vertex, interior}) {
    if (!candidate.allFinite()) continue;
    const double obj = objective(X, Y, candidate, Loss::absolute, penalty, lambda);
    if (absolute_loss_optimality_gap(X, Y, candidate, penalty, lambda) <= tol) {
      res.objective = obj;
      res.beta = candidate;
      res.converged = true;
      return res;
    }
    if (obj < res.objective) {
      res.objective = obj;
      res.beta = candidate;
    }
  }
  return res;
}

Eigen::VectorXd fit_lad(const Dataset& data, const SolverOptions& options) {
  return fit_penalized(data, PenaltySpec{Loss::absolute, Penalty::none, 0.0}, options);
}

Eigen::VectorXd fit_penalized(const Dataset& data, const PenaltySpec& spec,
                              const SolverOptions& options) {
  if (!spec.lambda && spec.penalty != Penalty::none)
    throw PreconditionError("fit_penalized needs an explicit lambda; use cross_validate");
  const double lambda = spec.lambda.value_or(0.0);
  FitResult res = solve(data.X, data.Y, spec.loss, spec.penalty, lambda, options);
  if (!res.converged) {
    std::ostringstream os;
    os << "solver did not converge in " << res.iterations << " iterations (objective "
       << res.objective << ")";
    throw ConvergenceError(os.str(), res.objective, res.iterations);
  }
  return res.beta;
}

double absolute_loss_optimality_gap(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
                                    const Eigen::VectorXd& beta, Penalty penalty, double lambda,
                                    double zero_tol) {
  check_shapes(X, Y);
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  const Eigen::VectorXd r = Y - X * beta;
  const double tol = zero_tol * (1.0 + Y.lpNorm<Eigen::Infinity>());
  if (lambda == 0.0) penalty = Penalty::none;

  // Target for X' nu: equality rows E, and |.| <= lambda on zero l1 coordinates.
  Eigen::VectorXd target = Eigen::VectorXd::Zero(p);
  std::vector<Eigen::Index> eq_cols;
  std::vector<Eigen::Index> box_cols;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (penalty == Penalty::l1 && beta[j] == 0.0) {
      box_cols.push_back(j);
      continue;
    }
    eq_cols.push_back(j);
    if (penalty == Penalty::l1) target[j] = lambda * sign(beta[j]);
    if (penalty == Penalty::l2) target[j] = 2.0 * lambda * beta[j];
  }

  Eigen::VectorXd nu = Eigen::VectorXd::Zero(n);
  std::vector<Eigen::Index> free_rows;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(r[i]) <= tol) free_rows.push_back(i);
    else nu[i] = sign(r[i]);
  }
  if (!free_rows.empty() && !eq_cols.empty()) {
    const auto m = static_cast<Eigen::Index>(free_rows.size());
    const auto k = static_cast<Eigen::Index>(eq_cols.size());
    const Eigen::VectorXd fixed = X.transpose() * nu;
    Eigen::MatrixXd sys(k, m);
    Eigen::VectorXd rhs(k);
    for (Eigen::Index a = 0; a < k; ++a) {
      const Eigen::Index j = eq_cols[static_cast<std::size_t>(a)];
      rhs[a] = target[j] - fixed[j];
      for (Eigen::Index b = 0; b < m; ++b) sys(a, b) = X(free_rows[static_cast<std::size_t>(b)], j);
    }
    const Eigen::VectorXd nu_free = sys.completeOrthogonalDecomposition().solve(rhs);
    for (Eigen::Index b = 0; b < m; ++b)
      nu[free_rows[static_cast<std::size_t>(b)]] = std::clamp(nu_free[b], -1.0, 1.0);
  }

  const Eigen::VectorXd xnu = X.transpose() * nu;
  double gap = 0.0;
  for (auto j : eq_cols) gap = std::max(gap, std::abs(xnu[j] - target[j]));
  for (auto j : box_cols) gap = std::max(gap, std::abs(xnu[j]) - lambda);
  return gap;
}

void CvConfig::validate() const {
  if (folds < 2) throw ConfigError("cross-validation needs at least 2 folds");
  if (grid.empty()) {
    if (grid_size < 1) throw ConfigError("lambda grid is empty");
    if (!(min_ratio > 0.0 && min_ratio <= 1.0)) throw ConfigError("grid min_ratio must lie in (0, 1]");
  } else {
    for (std::size_t k = 0; k < grid.size(); ++k) {
      if (!(grid[k] >= 0.0)) throw ConfigError("lambda grid values must be non-negative");
      if (k > 0 && !(grid[k] < grid[k - 1])) throw ConfigError("lambda grid must be strictly descending");
    }
  }
}

double lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y, Loss loss, Penalty penalty) {
  check_shapes(X, Y);
  Eigen::VectorXd grad;
  if (loss == Loss::squared) grad = 2.0 * (X.transpose() * Y);
  else grad = X.transpose() * Y.unaryExpr([](double v) { return sign(v); });
  const double top = grad.lpNorm<Eigen::Infinity>();
  if (penalty == Penalty::l2) return 1000.0 * top;
  return top;
}

std::vector<double> lambda_grid(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y, Loss loss,
                                Penalty penalty, const CvConfig& cv) {
  if (!cv.grid.empty()) return cv.grid;
  const double top = lambda_max(X, Y, loss, penalty);
  if (!(top > 0.0)) throw ConfigError("lambda_max is zero; response carries no signal");
  std::vector<double> grid(static_cast<std::size_t>(cv.grid_size));
  if (cv.grid_size == 1) {
    grid[0] = top;
    return grid;
  }
  const double step = std::log(cv.min_ratio) / static_cast<double>(cv.grid_size - 1);
  for (int k = 0; k < cv.grid_size; ++k) grid[static_cast<std::size_t>(k)] = top * std::exp(step * k);
  return grid;
}

CvResult cross_validate(const Dataset& data, const PenaltySpec& spec, const CvConfig& cv,
                        RngStream& rng, const SolverOptions& options) {
  cv.validate();
  if (spec.penalty == Penalty::none) throw ConfigError("unpenalized fits have no lambda to tune");
  const Eigen::Index n = data.n();
  if (cv.folds > n) throw ConfigError("more folds than observations");

  CvResult out;
  out.grid = lambda_grid(data.X, data.Y, spec.loss, spec.penalty, cv);

  // Fisher-Yates on our own uniform draws keeps fold assignment portable.
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  for (std::size_t i = perm.size() - 1; i > 0; --i) {
    const auto k = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i + 1));
    std::swap(perm[i], perm[std::min(k, i)]);
  }
  std::vector<int> fold_of(static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < perm.size(); ++k)
    fold_of[static_cast<std::size_t>(perm[k])] = static_cast<int>(k % static_cast<std::size_t>(cv.folds));

  SolverOptions path_opt = options;
  path_opt.polish = false;
  std::vector<double> loss_sum(out.grid.size(), 0.0);
  for (int f = 0; f < cv.folds; ++f) {
    std::vector<Eigen::Index> train, test;
    for (Eigen::Index i = 0; i < n; ++i)
      (fold_of[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
    const Eigen::MatrixXd x_train = data.X(train, Eigen::all);
    const Eigen::VectorXd y_train = data.Y(train);
    const Eigen::MatrixXd x_test = data.X(test, Eigen::all);
    const Eigen::VectorXd y_test = data.Y(test);

    const auto path = fit_path(x_train, y_train, spec.loss, spec.penalty, out.grid, path_opt);
    for (std::size_t k = 0; k < path.size(); ++k) {
      const Eigen::VectorXd r = y_test - x_test * path[k];
      loss_sum[k] += spec.loss == Loss::squared ? r.squaredNorm() : r.lpNorm<1>();
    }
  }

  out.cv_loss.resize(loss_sum.size());
  for (std::size_t k = 0; k < loss_sum.size(); ++k) out.cv_loss[k] = loss_sum[k] / static_cast<double>(n);
  // Grid is descending, so `<=` moves ties toward the smallest lambda.
  std::size_t best = 0;
  for (std::size_t k = 1; k < out.cv_loss.size(); ++k)
    if (out.cv_loss[k] <= out.cv_loss[best]) best = k;
  out.selected_index = best;
  out.lambda = out.grid[best];
  out.beta = solve(data.X, data.Y, spec.loss, spec.penalty, out.lambda, options).beta;
  return out;
}

}  // namespace rbreg::freq
