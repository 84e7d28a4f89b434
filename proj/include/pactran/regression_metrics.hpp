#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "pactran/dataset.hpp"
#include "pactran/optimize.hpp"

namespace pactran {

/// tr(pinv(cov(f)) cov_b), covariances with 1/N normalization and the
/// pseudo-inverse thresholded at 1e-10 of the top eigenvalue. Every class
/// must be present. Exactly invariant (up to the threshold) under invertible
/// affine feature maps when cov(f) has full rank.
double h_score(const FeatureSet& data);

struct LogmeClassState {
  int class_index = 0;
  double alpha = 1.0;       // weight precision
  double beta_noise = 1.0;  // observation precision
  double evidence = 0.0;    // log evidence for this class column
  int iterations = 0;
  bool converged = false;
  std::vector<double> evidence_trace;
};

struct LogmeResult {
  double score = 0.0;  // mean over classes of per-sample log evidence
  std::vector<LogmeClassState> per_class;
  std::vector<int> skipped_classes;  // absent classes (all-zero targets)
};

/// Bayesian linear-regression evidence against one-hot class targets, with
/// the SVD-based fixed-point updates for (alpha, beta). Stops at 1e-6
/// relative change of both precisions or 100 iterations.
LogmeResult logme_score(const FeatureSet& data);

/// Direct evidence evaluation at fixed precisions (shared by logme_score and
/// its oracle checks): log p(y | F, alpha, beta).
double logme_evidence(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
                      double alpha, double beta_noise);

struct LinearResult {
  double loss = 0.0;  // regularized training objective at the fitted probe
  bool converged = false;
};

/// Regularized source-free probe: cross-entropy + ||theta||^2/(2 beta) at the
/// L2 softmax fit. Identical code path to the PT-Gauss empirical risk term.
LinearResult linear_metric(const FeatureSet& data, double beta,
                           const OptimizerConfig& config = {});

struct LinearValidResult {
  double validation_error = 0.0;  // 0-1 error on the held-out fold
  double chosen_beta = 0.0;
  int fits_performed = 0;
  bool fold_missing_class = false;
  std::vector<double> errors_per_beta;
};

/// Stratified half/half split (seeded); fits one fold per beta in the grid,
/// scores 0-1 error on the other, returns the best (ties to the smaller
/// beta).
LinearValidResult linear_valid_metric(const FeatureSet& data, const std::vector<double>& beta_grid,
                                      std::uint64_t seed, const OptimizerConfig& config = {});

}  // namespace pactran
