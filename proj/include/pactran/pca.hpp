#pragma once

#include <Eigen/Core>

namespace pactran {

struct PcaModel {
  Eigen::VectorXd mean;        // d0
  Eigen::MatrixXd components;  // d x d0, orthonormal rows (top eigenvectors)
  double explained_energy_fraction = 0.0;
  bool degenerate = false;  // zero total variance
};

/// Principal components of the centered covariance. Keeps the smallest d whose
/// leading eigenvalues reach energy_fraction of the total; zero-variance input
/// degenerates to a single arbitrary unit direction, flagged.
PcaModel pca_fit(const Eigen::MatrixXd& data, double energy_fraction);

/// Projects rows: (x - mean) * components^T.
Eigen::MatrixXd pca_transform(const PcaModel& model, const Eigen::MatrixXd& data);

}  // namespace pactran
