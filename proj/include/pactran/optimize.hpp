#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

namespace pactran {

struct OptimizerConfig {
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;  // infinity norm of the gradient
  int history_size = 10;
  int line_search_max_steps = 40;
};

struct MinimizeResult {
  Eigen::VectorXd argmin;
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<double> objective_trace;  // objective at each accepted iterate
};

/// Objective callback: returns f(x) and fills grad (same size as x).
using ObjectiveFn = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

/// L-BFGS with backtracking Armijo line search. Intended for smooth strongly
/// convex objectives; throws NumericalError (carrying the point) if any
/// evaluation returns a non-finite value or gradient.
MinimizeResult minimize_convex(const ObjectiveFn& objective, Eigen::VectorXd initial,
                               const OptimizerConfig& config = {});

}  // namespace pactran
