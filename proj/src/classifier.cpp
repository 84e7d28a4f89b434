#include "pactran/classifier.hpp"

#include <cmath>

#include "pactran/errors.hpp"
#include "pactran/special.hpp"

namespace pactran {

namespace {

void validate_inputs(const Eigen::MatrixXd& features, const Eigen::VectorXi& labels,
                     int num_classes, const char* fn) {
  if (features.rows() == 0) throw ValidationError(std::string(fn) + ": empty feature matrix");
  if (features.rows() != labels.size()) {
    throw ValidationError(std::string(fn) + ": features/labels row mismatch");
  }
  if (num_classes < 2) throw ValidationError(std::string(fn) + ": need at least 2 classes");
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw ValidationError(std::string(fn) + ": label out of range at row " + std::to_string(i));
    }
  }
  if (!features.allFinite()) throw ValidationError(std::string(fn) + ": non-finite feature");
}

// Logits for theta (weights rows + bias row).
Eigen::MatrixXd logits_for(const Eigen::MatrixXd& features, const Eigen::MatrixXd& theta) {
  const Eigen::Index d = features.cols();
  Eigen::MatrixXd logits = features * theta.topRows(d);
  logits.rowwise() += theta.row(d);
  return logits;
}

}  // namespace

double softmax_cross_entropy(const Eigen::MatrixXd& features, const Eigen::VectorXi& labels,
                             int num_classes, const Eigen::MatrixXd& theta) {
  validate_inputs(features, labels, num_classes, "softmax_cross_entropy");
  if (theta.rows() != features.cols() + 1 || theta.cols() != num_classes) {
    throw ValidationError("softmax_cross_entropy: theta shape mismatch");
  }
  const Eigen::MatrixXd logits = logits_for(features, theta);
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    total += log_sum_exp(Eigen::VectorXd(logits.row(i))) - logits(i, labels[i]);
  }
  return total / static_cast<double>(logits.rows());
}

double l2_softmax_objective(const Eigen::MatrixXd& features, const Eigen::VectorXi& labels,
                            int num_classes, const Eigen::MatrixXd& theta, double beta) {
  if (!(beta > 0.0)) throw ValidationError("l2_softmax_objective: beta must be positive");
  return softmax_cross_entropy(features, labels, num_classes, theta) +
         theta.squaredNorm() / (2.0 * beta);
}

Eigen::MatrixXd l2_softmax_gradient(const Eigen::MatrixXd& features, const Eigen::VectorXi& labels,
                                    int num_classes, const Eigen::MatrixXd& theta, double beta) {
  validate_inputs(features, labels, num_classes, "l2_softmax_gradient");
  if (!(beta > 0.0)) throw ValidationError("l2_softmax_gradient: beta must be positive");
  const Eigen::Index n = features.rows();
  const Eigen::Index d = features.cols();
  Eigen::MatrixXd residual = softmax_probabilities(features, theta);  // S - Y
  for (Eigen::Index i = 0; i < n; ++i) residual(i, labels[i]) -= 1.0;
  Eigen::MatrixXd grad(theta.rows(), theta.cols());
  grad.topRows(d) = features.transpose() * residual / static_cast<double>(n);
  grad.row(d) = residual.colwise().sum() / static_cast<double>(n);
  grad += theta / beta;
  return grad;
}

Eigen::MatrixXd softmax_probabilities(const Eigen::MatrixXd& features,
                                      const Eigen::MatrixXd& theta) {
  Eigen::MatrixXd logits = logits_for(features, theta);
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    logits.row(i) = softmax_from_logits(Eigen::VectorXd(logits.row(i))).transpose();
  }
  return logits;
}

Eigen::VectorXi predict_labels(const Eigen::MatrixXd& features, const Eigen::MatrixXd& theta) {
  const Eigen::MatrixXd logits = logits_for(features, theta);
  Eigen::VectorXi out(logits.rows());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < logits.cols(); ++k) {
      if (logits(i, k) > logits(i, best)) best = k;
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

SoftmaxFit fit_l2_softmax(const Eigen::MatrixXd& features, const Eigen::VectorXi& labels,
                          int num_classes, double beta, const OptimizerConfig& config) {
  validate_inputs(features, labels, num_classes, "fit_l2_softmax");
  if (!(beta > 0.0)) throw ValidationError("fit_l2_softmax: beta must be positive");
  const Eigen::Index rows = features.cols() + 1;
  const Eigen::Index cols = num_classes;

  ObjectiveFn objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    const Eigen::Map<const Eigen::MatrixXd> theta(x.data(), rows, cols);
    const Eigen::MatrixXd g = l2_softmax_gradient(features, labels, num_classes, theta, beta);
    grad = Eigen::Map<const Eigen::VectorXd>(g.data(), g.size());
    return l2_softmax_objective(features, labels, num_classes, theta, beta);
  };

  MinimizeResult min = minimize_convex(objective, Eigen::VectorXd::Zero(rows * cols), config);
  SoftmaxFit fit;
  fit.theta = Eigen::Map<const Eigen::MatrixXd>(min.argmin.data(), rows, cols);
  fit.objective = min.value;
  fit.converged = min.converged;
  fit.iterations = min.iterations;
  return fit;
}

}  // namespace pactran
