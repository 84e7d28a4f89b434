#include "pactran/optimize.hpp"

#include <cmath>
#include <deque>

#include "pactran/errors.hpp"

namespace pactran {

namespace {

struct CurvaturePair {
  Eigen::VectorXd s;
  Eigen::VectorXd y;
  double rho;
};

bool finite(double f, const Eigen::VectorXd& g) {
  return std::isfinite(f) && g.allFinite();
}

// Standard two-loop recursion with gamma scaling from the newest pair.
Eigen::VectorXd two_loop_direction(const Eigen::VectorXd& grad,
                                   const std::deque<CurvaturePair>& history) {
  Eigen::VectorXd q = grad;
  std::vector<double> alpha(history.size());
  for (int i = static_cast<int>(history.size()) - 1; i >= 0; --i) {
    alpha[i] = history[i].rho * history[i].s.dot(q);
    q -= alpha[i] * history[i].y;
  }
  if (!history.empty()) {
    const CurvaturePair& last = history.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (size_t i = 0; i < history.size(); ++i) {
    const double beta = history[i].rho * history[i].y.dot(q);
    q += (alpha[i] - beta) * history[i].s;
  }
  return -q;
}

}  // namespace

MinimizeResult minimize_convex(const ObjectiveFn& objective, Eigen::VectorXd initial,
                               const OptimizerConfig& config) {
  MinimizeResult result;
  Eigen::VectorXd x = std::move(initial);
  Eigen::VectorXd grad(x.size());
  double f = objective(x, grad);
  if (!finite(f, grad)) throw NumericalError("minimize_convex: non-finite objective at start", x);
  result.objective_trace.push_back(f);

  constexpr double kArmijoC1 = 1e-4;
  std::deque<CurvaturePair> history;

  for (int iter = 0; iter < config.max_iterations; ++iter) {
    if (grad.lpNorm<Eigen::Infinity>() <= config.gradient_tolerance) {
      result.converged = true;
      break;
    }
    Eigen::VectorXd direction = two_loop_direction(grad, history);
    double slope = grad.dot(direction);
    if (!(slope < 0.0)) {  // not a descent direction: fall back to steepest descent
      direction = -grad;
      slope = -grad.squaredNorm();
    }
    // First iteration has no curvature information: scale to a unit-size step.
    double step = history.empty() ? 1.0 / std::max(1.0, grad.lpNorm<Eigen::Infinity>()) : 1.0;

    Eigen::VectorXd x_new(x.size()), grad_new(x.size());
    double f_new = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < config.line_search_max_steps; ++ls) {
      x_new = x + step * direction;
      f_new = objective(x_new, grad_new);
      if (!finite(f_new, grad_new)) {
        throw NumericalError("minimize_convex: non-finite objective during line search", x_new);
      }
      if (f_new <= f + kArmijoC1 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // step underflow; leave converged as the tolerance decides

    Eigen::VectorXd s = x_new - x;
    Eigen::VectorXd y = grad_new - grad;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      history.push_back({std::move(s), std::move(y), 1.0 / sy});
      if (static_cast<int>(history.size()) > config.history_size) history.pop_front();
    }
    x = std::move(x_new);
    grad = std::move(grad_new);
    f = f_new;
    result.objective_trace.push_back(f);
    result.iterations = iter + 1;
  }
  if (!result.converged && grad.lpNorm<Eigen::Infinity>() <= config.gradient_tolerance) {
    result.converged = true;
  }
  result.argmin = std::move(x);
  result.value = f;
  return result;
}

}  // namespace pactran
