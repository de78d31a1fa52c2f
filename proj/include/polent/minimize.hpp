#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace polent {

struct MinimizeOptions {
  double tolerance = 1e-9;     // stop once an accepted step improves the objective by less than this
  int max_iterations = 10000;
  bool record_trace = false;
};

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;  // objective after each accepted step, starting point first
};

/*!
 * Quasi-Newton (BFGS) minimization with Armijo backtracking.
 *
 * `fn(x, grad)` returns the objective at x and writes the gradient into
 * `grad`. Every accepted step strictly lowers the objective. The inverse
 * Hessian estimate is reset to a scaled identity whenever it stops
 * producing descent directions.
 */
template <class Objective>
MinimizeResult minimize_bfgs(Objective&& fn, Eigen::VectorXd x, const MinimizeOptions& opts = {}) {
  const Eigen::Index n = x.size();
  MinimizeResult res;
  Eigen::VectorXd g(n), g_new(n), x_new(n);
  double f = fn(x, g);
  if (opts.record_trace) res.trace.push_back(f);

  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
  bool fresh = true;  // h is (a multiple of) the identity

  while (res.iterations < opts.max_iterations) {
    if (!std::isfinite(f) || !g.allFinite() || g.squaredNorm() == 0.0) {
      res.converged = std::isfinite(f);
      break;
    }
    Eigen::VectorXd d = -h * g;
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      h.setIdentity();
      fresh = true;
      d = -g;
      slope = -g.squaredNorm();
    }
    // Untrained curvature: keep the first probe step modest.
    double step = fresh && res.iterations == 0 ? std::min(1.0, 1.0 / std::sqrt(-slope)) : 1.0;

    constexpr double armijo = 1e-4;
    double f_new = 0.0;
    bool accepted = false;
    for (int k = 0; k < 80; ++k) {
      x_new = x + step * d;
      f_new = fn(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= f + armijo * step * slope && f_new < f) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!fresh) {
        h.setIdentity();
        fresh = true;
        continue;
      }
      // No descent along the gradient at machine precision: stationary.
      res.converged = true;
      break;
    }

    ++res.iterations;
    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    const double improvement = f - f_new;
    x = x_new;
    f = f_new;
    g = g_new;
    if (opts.record_trace) res.trace.push_back(f);

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (fresh) h *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd e = Eigen::MatrixXd::Identity(n, n) - rho * s * y.transpose();
      h = e * h * e.transpose() + rho * s * s.transpose();
      fresh = false;
    }

    if (improvement < opts.tolerance) {
      res.converged = true;
      break;
    }
  }
  res.x = x;
  res.value = f;
  return res;
}

} // namespace polent
