#pragma once

#include <Eigen/Core>

#include "pactran/optimize.hpp"

namespace pactran {

/// L2-regularized multinomial logistic regression on raw features.
/// theta is (D+1) x K: rows 0..D-1 hold the weights, row D the bias.
/// The bias row is regularized along with the weights.

struct SoftmaxFit {
  Eigen::MatrixXd theta;  // (D+1) x K
  double objective = 0.0;  // cross-entropy + ||theta||_F^2 / (2 beta) at theta
  bool converged = false;
  int iterations = 0;
};

/// Mean cross-entropy (1/N) sum_i [-g_{i,y_i} + logsumexp(g_i)], g = X W + b.
double softmax_cross_entropy(const Eigen::MatrixXd& features, const Eigen::VectorXi& labels,
                             int num_classes, const Eigen::MatrixXd& theta);

/// Cross-entropy plus ||theta||_F^2 / (2 beta).
double l2_softmax_objective(const Eigen::MatrixXd& features, const Eigen::VectorXi& labels,
                            int num_classes, const Eigen::MatrixXd& theta, double beta);

/// Gradient of l2_softmax_objective in theta, same shape as theta.
Eigen::MatrixXd l2_softmax_gradient(const Eigen::MatrixXd& features, const Eigen::VectorXi& labels,
                                    int num_classes, const Eigen::MatrixXd& theta, double beta);

/// N x K softmax probabilities for the classifier theta.
Eigen::MatrixXd softmax_probabilities(const Eigen::MatrixXd& features,
                                      const Eigen::MatrixXd& theta);

/// argmax predictions (ties resolve to the lowest class index).
Eigen::VectorXi predict_labels(const Eigen::MatrixXd& features, const Eigen::MatrixXd& theta);

/// Minimizes the regularized cross-entropy from a zero initialization via
/// L-BFGS. Non-convergence is reported through the flag, never thrown.
SoftmaxFit fit_l2_softmax(const Eigen::MatrixXd& features, const Eigen::VectorXi& labels,
                          int num_classes, double beta, const OptimizerConfig& config = {});

}  // namespace pactran
