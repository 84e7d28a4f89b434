#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace pactran {

struct GmmConfig {
  int max_iterations = 200;
  double tolerance = 1e-6;       // stop when total log-likelihood gains less
  int restarts = 3;              // independent seeded restarts, best kept
  double covariance_floor = 1e-6;  // added to every covariance diagonal
};

struct GmmModel {
  Eigen::VectorXd weights;                  // V
  Eigen::MatrixXd means;                    // V x d
  std::vector<Eigen::MatrixXd> covariances;  // V of d x d
  double log_likelihood = 0.0;              // total over rows
  int iterations = 0;
  bool converged = false;
  std::vector<double> log_likelihood_trace;
};

/// Full-covariance Gaussian mixture fit by EM with k-means++-style seeding.
/// Deterministic given (data, num_components, seed, config).
GmmModel gmm_fit(const Eigen::MatrixXd& data, int num_components, std::uint64_t seed,
                 const GmmConfig& config = {});

/// N x V posterior responsibilities, computed in log space and normalized.
Eigen::MatrixXd gmm_posterior(const GmmModel& model, const Eigen::MatrixXd& data);

}  // namespace pactran
