#include <cmath>
#include <random>

#include <doctest.h>
#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "pactran/gmm.hpp"
#include "pactran/pca.hpp"
#include "pactran/special.hpp"
#include "test_util.hpp"

using namespace pactran;

TEST_CASE("pca keeps the dominant direction of anisotropic data") {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> normal(0.0, 1.0);
  // Variances 100, 1, 0.01 along the axes: 80% energy needs one component.
  Eigen::MatrixXd data(400, 3);
  for (int i = 0; i < data.rows(); ++i) {
    data(i, 0) = 10.0 * normal(rng);
    data(i, 1) = normal(rng);
    data(i, 2) = 0.1 * normal(rng);
  }
  const PcaModel model = pca_fit(data, 0.8);
  CHECK_FALSE(model.degenerate);
  CHECK(model.components.rows() == 1);
  CHECK(model.explained_energy_fraction >= 0.8);
  CHECK(std::abs(model.components(0, 0)) > 0.99);
  CHECK(model.components.row(0).norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pca projector matches a direct eigendecomposition") {
  std::mt19937_64 rng(42);
  const Eigen::MatrixXd data = testutil::random_matrix(rng, 120, 6);
  const PcaModel model = pca_fit(data, 0.8);

  const Eigen::RowVectorXd mean = data.colwise().mean();
  const Eigen::MatrixXd centered = data.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / data.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const int kept = static_cast<int>(model.components.rows());
  // Subspace comparison through projectors: basis sign and order free.
  const Eigen::MatrixXd top = eig.eigenvectors().rightCols(kept);
  const Eigen::MatrixXd reference = top * top.transpose();
  const Eigen::MatrixXd mine = model.components.transpose() * model.components;
  CHECK((reference - mine).norm() < 1e-9);
  CHECK((model.mean.transpose() - mean).norm() < 1e-12);

  // Energy bookkeeping: kept - 1 components would fall short of the target.
  double total = eig.eigenvalues().sum();
  double partial = 0.0;
  for (int j = 0; j < kept - 1; ++j) {
    partial += eig.eigenvalues()[eig.eigenvalues().size() - 1 - j];
  }
  CHECK(partial / total < 0.8);
  CHECK(model.explained_energy_fraction >= 0.8);
}

TEST_CASE("pca transform equals centered projection") {
  std::mt19937_64 rng(43);
  const Eigen::MatrixXd data = testutil::random_matrix(rng, 50, 4);
  const PcaModel model = pca_fit(data, 0.9);
  const Eigen::MatrixXd projected = pca_transform(model, data);
  const Eigen::MatrixXd expected =
      (data.rowwise() - model.mean.transpose()) * model.components.transpose();
  CHECK((projected - expected).norm() < 1e-12);
}

TEST_CASE("pca flags zero-variance data") {
  const Eigen::MatrixXd data = Eigen::MatrixXd::Constant(10, 3, 2.5);
  const PcaModel model = pca_fit(data, 0.8);
  CHECK(model.degenerate);
  CHECK(model.components.rows() == 1);
  CHECK(model.components.row(0).norm() == doctest::Approx(1.0).epsilon(1e-12));
}

namespace {

Eigen::MatrixXd well_separated_clusters(std::mt19937_64& rng, int per_cluster, int dim,
                                        const std::vector<Eigen::VectorXd>& centers,
                                        double spread) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd data(per_cluster * centers.size(), dim);
  int row = 0;
  for (const auto& center : centers) {
    for (int i = 0; i < per_cluster; ++i, ++row) {
      for (int j = 0; j < dim; ++j) data(row, j) = center[j] + spread * normal(rng);
    }
  }
  return data;
}

}  // namespace

TEST_CASE("gmm log-likelihood trace is non-decreasing") {
  std::mt19937_64 rng(44);
  std::vector<Eigen::VectorXd> centers(3, Eigen::VectorXd::Zero(2));
  centers[0] << 0.0, 0.0;
  centers[1] << 5.0, 0.0;
  centers[2] << 0.0, 5.0;
  const Eigen::MatrixXd data = well_separated_clusters(rng, 40, 2, centers, 0.6);
  const GmmModel model = gmm_fit(data, 3, 7);
  REQUIRE(model.log_likelihood_trace.size() >= 2);
  for (size_t i = 1; i < model.log_likelihood_trace.size(); ++i) {
    CHECK(model.log_likelihood_trace[i] >= model.log_likelihood_trace[i - 1] - 1e-9);
  }
  CHECK(model.converged);
}

TEST_CASE("gmm is deterministic in the seed") {
  std::mt19937_64 rng(45);
  const Eigen::MatrixXd data = testutil::random_matrix(rng, 80, 3);
  const GmmModel a = gmm_fit(data, 4, 123);
  const GmmModel b = gmm_fit(data, 4, 123);
  CHECK(a.log_likelihood == b.log_likelihood);
  CHECK((a.means - b.means).norm() == 0.0);
  CHECK((a.weights - b.weights).norm() == 0.0);
}

TEST_CASE("gmm recovers well-separated clusters") {
  std::mt19937_64 rng(46);
  std::vector<Eigen::VectorXd> centers(2, Eigen::VectorXd::Zero(2));
  centers[0] << -4.0, 0.0;
  centers[1] << 4.0, 0.0;
  const Eigen::MatrixXd data = well_separated_clusters(rng, 60, 2, centers, 0.5);
  const GmmModel model = gmm_fit(data, 2, 9);
  // One mean near each center, in some order.
  const double d00 = (model.means.row(0).transpose() - centers[0]).norm();
  const double d01 = (model.means.row(0).transpose() - centers[1]).norm();
  const double near = std::min(d00, d01);
  const double far_center = near == d00 ? d01 : d00;
  CHECK(near < 0.3);
  CHECK((model.means.row(1).transpose() - (near == d00 ? centers[1] : centers[0])).norm() < 0.3);
  CHECK(far_center > 3.0);
  CHECK(model.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gmm posteriors match direct density ratios and sum to one") {
  std::mt19937_64 rng(47);
  const Eigen::MatrixXd data = testutil::random_matrix(rng, 60, 2);
  const GmmModel model = gmm_fit(data, 3, 5);
  const Eigen::MatrixXd posterior = gmm_posterior(model, data);
  REQUIRE(posterior.rows() == data.rows());
  REQUIRE(posterior.cols() == 3);

  for (int i = 0; i < data.rows(); ++i) {
    CHECK(posterior.row(i).sum() == doctest::Approx(1.0).epsilon(1e-10));
    // Direct densities: w_v N(x; mu_v, Sigma_v), normalized by hand.
    Eigen::VectorXd log_terms(3);
    for (int v = 0; v < 3; ++v) {
      const Eigen::VectorXd diff = data.row(i).transpose() - model.means.row(v).transpose();
      const Eigen::LLT<Eigen::MatrixXd> llt(model.covariances[v]);
      const Eigen::VectorXd white = llt.matrixL().solve(diff);
      double log_det = 0.0;
      for (int j = 0; j < 2; ++j) log_det += std::log(llt.matrixL()(j, j));
      log_terms[v] = std::log(model.weights[v]) - 0.5 * white.squaredNorm() - log_det -
                     0.5 * 2 * std::log(2.0 * M_PI);
    }
    const Eigen::VectorXd expected = softmax_from_logits(log_terms);
    CHECK((posterior.row(i).transpose() - expected).norm() < 1e-9);
  }
}
