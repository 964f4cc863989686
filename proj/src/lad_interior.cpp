#include "lad_interior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace rbreg::freq::detail {

namespace {

// Largest step in (0, 1] keeping v + step * dv strictly positive.
double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
  double step = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (dv[i] < 0.0) step = std::min(step, -v[i] / dv[i]);
  return step;
}

}  // namespace

Eigen::VectorXd lad_interior_point(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y, int max_iterations,
                                   double gap_tol) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  const Eigen::VectorXd c = -Y;

  // Primal (a, s) with a + s = 1, dual (y, z, w) with X y + z - w = c.
  Eigen::VectorXd a = Eigen::VectorXd::Constant(n, 0.5);
  Eigen::VectorXd s = Eigen::VectorXd::Constant(n, 0.5);
  Eigen::VectorXd y = -X.colPivHouseholderQr().solve(Y);
  Eigen::VectorXd rc = c - X * y;
  const double offset = std::max(rc.cwiseAbs().mean(), 1e-8);
  Eigen::VectorXd z = rc.cwiseMax(0.0).array() + offset;
  Eigen::VectorXd w = z - rc;
  const Eigen::VectorXd b = 0.5 * X.transpose() * Eigen::VectorXd::Ones(n);

  Eigen::VectorXd dx(n), ds(n), dz(n), dw(n), dy(p);
  for (int it = 0; it < max_iterations; ++it) {
    const double gap = a.dot(z) + s.dot(w);
    const double obj = std::abs(Y.dot(a));
    if (gap <= gap_tol * (1.0 + obj)) break;

    const Eigen::VectorXd rb = b - X.transpose() * a;
    rc = c - X * y - z + w;
    const Eigen::VectorXd q_inv = (z.array() / a.array() + w.array() / s.array()).inverse().matrix();
    Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(p, p);
    normal.selfadjointView<Eigen::Lower>().rankUpdate((X.array().colwise() * q_inv.array().sqrt()).matrix().transpose());
    const Eigen::LDLT<Eigen::MatrixXd> factor(normal.selfadjointView<Eigen::Lower>());
    if (factor.info() != Eigen::Success) break;

    // One Newton solve for right-hand sides r_az = target - a z, r_sw = target - s w.
    auto newton = [&](const Eigen::VectorXd& r_az, const Eigen::VectorXd& r_sw) {
      const Eigen::VectorXd rho = r_az.cwiseQuotient(a) - r_sw.cwiseQuotient(s) - rc;
      dy = factor.solve(rb - X.transpose() * q_inv.cwiseProduct(rho));
      dx = q_inv.cwiseProduct(X * dy + rho);
      ds = -dx;
      dz = (r_az - z.cwiseProduct(dx)).cwiseQuotient(a);
      dw = (r_sw - w.cwiseProduct(ds)).cwiseQuotient(s);
    };

    newton(-a.cwiseProduct(z), -s.cwiseProduct(w));
    double alpha_p = std::min(max_step(a, dx), max_step(s, ds));
    double alpha_d = std::min(max_step(z, dz), max_step(w, dw));
    const double mu = gap / (2.0 * static_cast<double>(n));
    const double mu_aff = ((a + alpha_p * dx).dot(z + alpha_d * dz) + (s + alpha_p * ds).dot(w + alpha_d * dw)) /
                          (2.0 * static_cast<double>(n));
    const double sigma = std::pow(mu_aff / mu, 3);

    const Eigen::VectorXd r_az = (sigma * mu - (a.cwiseProduct(z) + dx.cwiseProduct(dz)).array()).matrix();
    const Eigen::VectorXd r_sw = (sigma * mu - (s.cwiseProduct(w) + ds.cwiseProduct(dw)).array()).matrix();
    newton(r_az, r_sw);
    alpha_p = 0.99995 * std::min(max_step(a, dx), max_step(s, ds));
    alpha_d = 0.99995 * std::min(max_step(z, dz), max_step(w, dw));
    a += alpha_p * dx;
    s += alpha_p * ds;
    y += alpha_d * dy;
    z += alpha_d * dz;
    w += alpha_d * dw;
  }
  return -y;
}

Eigen::VectorXd lad_vertex(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y, const Eigen::VectorXd& beta) {
  const Eigen::Index p = X.cols();
  const Eigen::VectorXd r = (Y - X * beta).cwiseAbs();
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(r.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::partial_sort(idx.begin(), idx.begin() + p, idx.end(), [&](Eigen::Index i, Eigen::Index j) { return r[i] < r[j]; });
  Eigen::MatrixXd sub(p, p);
  Eigen::VectorXd rhs(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    sub.row(k) = X.row(idx[static_cast<std::size_t>(k)]);
    rhs[k] = Y[idx[static_cast<std::size_t>(k)]];
  }
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(sub);
  if (!lu.isInvertible()) return Eigen::VectorXd::Constant(p, std::numeric_limits<double>::quiet_NaN());
  return lu.solve(rhs);
}

Eigen::VectorXd lad_ridge_dual(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y, double lambda,
                               const Eigen::VectorXd& beta0, int max_sweeps) {
  const Eigen::Index n = X.rows();
  const double two_lambda = 2.0 * lambda;
  const Eigen::VectorXd q = X.rowwise().squaredNorm();
  const Eigen::VectorXd r0 = Y - X * beta0;
  Eigen::VectorXd a(n);
  for (Eigen::Index i = 0; i < n; ++i) a[i] = r0[i] > 0 ? 1.0 : (r0[i] < 0 ? -1.0 : 0.0);
  Eigen::VectorXd v = X.transpose() * a;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double moved = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (q[i] == 0.0) continue;
      // The partial derivative is the primal residual at beta = v / (2 lambda).
      const double r = Y[i] - X.row(i).dot(v) / two_lambda;
      const double next = std::clamp(a[i] + two_lambda * r / q[i], -1.0, 1.0);
      const double d = next - a[i];
      if (d == 0.0) continue;
      v.noalias() += d * X.row(i).transpose();
      a[i] = next;
      moved = std::max(moved, std::abs(d));
    }
    if (moved < 1e-14) break;
  }

  auto primal = [&](const Eigen::VectorXd& b) { return (Y - X * b).lpNorm<1>() + lambda * b.squaredNorm(); };
  Eigen::VectorXd best = v / two_lambda;
  double best_obj = primal(best);

  std::vector<Eigen::Index> face;
  Eigen::VectorXd bound = a;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(a[i]) < 1.0) {
      face.push_back(i);
      bound[i] = 0.0;
    }
  }
  if (!face.empty()) {
    const auto m = static_cast<Eigen::Index>(face.size());
    Eigen::MatrixXd xz(m, X.cols());
    Eigen::VectorXd yz(m);
    for (Eigen::Index k = 0; k < m; ++k) {
      xz.row(k) = X.row(face[static_cast<std::size_t>(k)]);
      yz[k] = Y[face[static_cast<std::size_t>(k)]];
    }
    const Eigen::VectorXd rhs = two_lambda * yz - xz * (X.transpose() * bound);
    const Eigen::VectorXd az = (xz * xz.transpose()).completeOrthogonalDecomposition().solve(rhs);
    for (Eigen::Index k = 0; k < m; ++k) bound[face[static_cast<std::size_t>(k)]] = std::clamp(az[k], -1.0, 1.0);
    const Eigen::VectorXd candidate = X.transpose() * bound / two_lambda;
    if (candidate.allFinite() && primal(candidate) <= best_obj) best = candidate;
  }
  return best;
}

}  // namespace rbreg::freq::detail
