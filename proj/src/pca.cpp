#include "pactran/pca.hpp"

#include <Eigen/Eigenvalues>

#include "pactran/errors.hpp"

namespace pactran {

PcaModel pca_fit(const Eigen::MatrixXd& data, double energy_fraction) {
  if (data.rows() < 1 || data.cols() < 1) throw ValidationError("pca_fit: empty input");
  if (!(energy_fraction > 0.0) || energy_fraction > 1.0) {
    throw ValidationError("pca_fit: energy_fraction must lie in (0, 1]");
  }
  if (!data.allFinite()) throw ValidationError("pca_fit: non-finite input");

  PcaModel model;
  model.mean = data.colwise().mean();
  const Eigen::MatrixXd centered = data.rowwise() - model.mean.transpose();
  const Eigen::MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(data.rows());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  // Ascending eigenvalues; walk from the top.
  const Eigen::VectorXd values = eig.eigenvalues().cwiseMax(0.0);
  const double total = values.sum();
  const Eigen::Index d0 = data.cols();
  if (total <= 0.0) {
    model.components = Eigen::MatrixXd::Zero(1, d0);
    model.components(0, 0) = 1.0;
    model.explained_energy_fraction = 1.0;
    model.degenerate = true;
    return model;
  }
  Eigen::Index keep = 0;
  double captured = 0.0;
  while (keep < d0 && captured < energy_fraction * total) {
    captured += values[d0 - 1 - keep];
    ++keep;
  }
  model.components.resize(keep, d0);
  for (Eigen::Index i = 0; i < keep; ++i) {
    model.components.row(i) = eig.eigenvectors().col(d0 - 1 - i).transpose();
  }
  model.explained_energy_fraction = captured / total;
  return model;
}

Eigen::MatrixXd pca_transform(const PcaModel& model, const Eigen::MatrixXd& data) {
  if (data.cols() != model.mean.size()) throw ValidationError("pca_transform: dimension mismatch");
  return (data.rowwise() - model.mean.transpose()) * model.components.transpose();
}

}  // namespace pactran
