#include "pactran/regression_metrics.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "pactran/classifier.hpp"
#include "pactran/errors.hpp"
#include "pactran/rng.hpp"
#include "pactran/special.hpp"

namespace pactran {

namespace {

constexpr double kLog2Pi = 1.8378770664093455;

}  // namespace

double h_score(const FeatureSet& data) {
  const DatasetReport report = validate_dataset(data);
  if (!report.missing_classes.empty()) {
    throw ValidationError("h_score: class " + std::to_string(report.missing_classes.front()) +
                          " has no examples");
  }
  const Eigen::Index n = data.features.rows();
  const Eigen::Index d = data.features.cols();
  const int k = data.num_classes;

  const Eigen::RowVectorXd mean = data.features.colwise().mean();
  const Eigen::MatrixXd centered = data.features.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n);

  // Between-class covariance of the class-conditional means under the
  // empirical label distribution.
  Eigen::MatrixXd class_means = Eigen::MatrixXd::Zero(k, d);
  Eigen::VectorXd class_mass = Eigen::VectorXd::Zero(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    class_means.row(data.labels[i]) += data.features.row(i);
    class_mass[data.labels[i]] += 1.0;
  }
  Eigen::MatrixXd cov_between = Eigen::MatrixXd::Zero(d, d);
  for (int y = 0; y < k; ++y) {
    class_means.row(y) /= class_mass[y];
    const Eigen::VectorXd diff = class_means.row(y).transpose() - mean.transpose();
    cov_between.noalias() += (class_mass[y] / static_cast<double>(n)) * diff * diff.transpose();
  }

  // tr(pinv(cov) cov_b) over eigenvalues above the relative threshold.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const double top = eig.eigenvalues().maxCoeff();
  if (!(top > 0.0)) return 0.0;  // constant features: both covariances vanish
  const double threshold = 1e-10 * top;
  double score = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double value = eig.eigenvalues()[i];
    if (value > threshold) {
      const Eigen::VectorXd v = eig.eigenvectors().col(i);
      score += v.dot(cov_between * v) / value;
    }
  }
  return score;
}

double logme_evidence(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
                      double alpha, double beta_noise) {
  if (features.rows() != targets.size()) throw ValidationError("logme_evidence: row mismatch");
  if (!(alpha > 0.0) || !(beta_noise > 0.0)) {
    throw ValidationError("logme_evidence: precisions must be positive");
  }
  const Eigen::Index n = features.rows();
  const Eigen::Index d = features.cols();
  const Eigen::MatrixXd a =
      alpha * Eigen::MatrixXd::Identity(d, d) + beta_noise * features.transpose() * features;
  const Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw NumericalError("logme_evidence: A not positive definite");
  const Eigen::VectorXd m = beta_noise * llt.solve(features.transpose() * targets);
  double log_det = 0.0;
  const Eigen::MatrixXd l = llt.matrixL();
  for (Eigen::Index i = 0; i < d; ++i) log_det += 2.0 * std::log(l(i, i));
  const double residual = (targets - features * m).squaredNorm();
  return 0.5 * d * std::log(alpha) + 0.5 * n * std::log(beta_noise) - 0.5 * n * kLog2Pi -
         0.5 * log_det - 0.5 * beta_noise * residual - 0.5 * alpha * m.squaredNorm();
}

LogmeResult logme_score(const FeatureSet& data) {
  const DatasetReport report = validate_dataset(data);
  const Eigen::Index n = data.features.rows();
  const Eigen::Index d = data.features.cols();
  if (n < 2) throw ValidationError("logme_score: need at least two examples");

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(data.features,
                                              Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd sigma = svd.singularValues();
  const Eigen::Index r = sigma.size();
  const Eigen::VectorXd sigma_sq = sigma.array().square();

  LogmeResult result;
  double evidence_total = 0.0;
  int classes_used = 0;
  for (int k = 0; k < data.num_classes; ++k) {
    if (report.class_counts[k] == 0) {
      result.skipped_classes.push_back(k);
      continue;
    }
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = data.labels[i] == k ? 1.0 : 0.0;
    const Eigen::VectorXd c = svd.matrixU().transpose() * y;
    const double y_sq = y.squaredNorm();
    const Eigen::VectorXd c_sq = c.array().square();

    LogmeClassState state;
    state.class_index = k;
    double alpha = 1.0, beta = 1.0;
    auto evidence_at = [&](double a, double b) {
      double log_det_terms = 0.0;
      for (Eigen::Index j = 0; j < r; ++j) log_det_terms += std::log(a + b * sigma_sq[j]);
      double m_sq = 0.0, res = y_sq - c_sq.sum();
      for (Eigen::Index j = 0; j < r; ++j) {
        const double denom = a + b * sigma_sq[j];
        const double mj = b * sigma[j] * c[j] / denom;
        m_sq += mj * mj;
        const double one_minus = a / denom;
        res += one_minus * one_minus * c_sq[j];
      }
      const double evidence = 0.5 * d * std::log(a) + 0.5 * n * std::log(b) -
                              0.5 * n * kLog2Pi -
                              0.5 * (static_cast<double>(d - r) * std::log(a) + log_det_terms) -
                              0.5 * b * res - 0.5 * a * m_sq;
      return std::tuple<double, double, double>(evidence, m_sq, res);
    };

    for (int iter = 0; iter < 100; ++iter) {
      const auto [evidence, m_sq, res] = evidence_at(alpha, beta);
      state.evidence_trace.push_back(evidence);
      state.evidence = evidence;
      state.iterations = iter;
      double gamma = 0.0;
      for (Eigen::Index j = 0; j < r; ++j) {
        gamma += beta * sigma_sq[j] / (alpha + beta * sigma_sq[j]);
      }
      const double alpha_new = gamma / std::max(m_sq, 1e-300);
      const double beta_new =
          std::max(static_cast<double>(n) - gamma, 1e-12) / std::max(res, 1e-300);
      const bool settled = std::abs(alpha_new - alpha) <= 1e-6 * alpha &&
                           std::abs(beta_new - beta) <= 1e-6 * beta;
      alpha = alpha_new;
      beta = beta_new;
      if (settled) {
        state.converged = true;
        break;
      }
    }
    const auto [final_evidence, m_sq, res] = evidence_at(alpha, beta);
    state.evidence = final_evidence;
    state.evidence_trace.push_back(final_evidence);
    state.alpha = alpha;
    state.beta_noise = beta;
    evidence_total += state.evidence / static_cast<double>(n);
    ++classes_used;
    result.per_class.push_back(std::move(state));
  }
  if (classes_used == 0) throw ValidationError("logme_score: no class has any examples");
  result.score = evidence_total / static_cast<double>(classes_used);
  return result;
}

LinearResult linear_metric(const FeatureSet& data, double beta, const OptimizerConfig& config) {
  validate_dataset(data);
  const SoftmaxFit fit = fit_l2_softmax(data.features, data.labels, data.num_classes, beta, config);
  return {fit.objective, fit.converged};
}

LinearValidResult linear_valid_metric(const FeatureSet& data, const std::vector<double>& beta_grid,
                                      std::uint64_t seed, const OptimizerConfig& config) {
  const DatasetReport report = validate_dataset(data);
  if (beta_grid.empty()) throw ValidationError("linear_valid_metric: empty beta grid");
  if (report.num_examples < 2) throw ValidationError("linear_valid_metric: need >= 2 examples");

  // Stratified half/half split; odd classes alternate their extra element
  // between folds to keep the sizes balanced.
  std::mt19937_64 rng(seed);
  std::vector<int> fold_train, fold_valid;
  bool extra_to_train = true;
  for (int y = 0; y < data.num_classes; ++y) {
    std::vector<int> members;
    for (Eigen::Index i = 0; i < data.labels.size(); ++i) {
      if (data.labels[i] == y) members.push_back(static_cast<int>(i));
    }
    shuffle_in_place(members, rng);
    size_t take = members.size() / 2;
    if (members.size() % 2 == 1) {
      if (extra_to_train) ++take;
      extra_to_train = !extra_to_train;
    }
    fold_train.insert(fold_train.end(), members.begin(), members.begin() + take);
    fold_valid.insert(fold_valid.end(), members.begin() + take, members.end());
  }
  std::sort(fold_train.begin(), fold_train.end());
  std::sort(fold_valid.begin(), fold_valid.end());
  if (fold_train.empty() || fold_valid.empty()) {
    throw ValidationError("linear_valid_metric: a fold came out empty");
  }

  const FeatureSet train = take_rows(data, fold_train);
  const FeatureSet valid = take_rows(data, fold_valid);

  LinearValidResult result;
  std::vector<char> train_has(data.num_classes, 0), valid_has(data.num_classes, 0);
  for (Eigen::Index i = 0; i < train.labels.size(); ++i) train_has[train.labels[i]] = 1;
  for (Eigen::Index i = 0; i < valid.labels.size(); ++i) valid_has[valid.labels[i]] = 1;
  for (int y = 0; y < data.num_classes; ++y) {
    if (report.class_counts[y] > 0 && (!train_has[y] || !valid_has[y])) {
      result.fold_missing_class = true;
    }
  }

  std::vector<double> grid = beta_grid;
  std::sort(grid.begin(), grid.end());
  double best_error = std::numeric_limits<double>::infinity();
  for (double beta : grid) {
    if (!(beta > 0.0)) throw ValidationError("linear_valid_metric: beta must be positive");
    const SoftmaxFit fit =
        fit_l2_softmax(train.features, train.labels, data.num_classes, beta, config);
    ++result.fits_performed;
    const Eigen::VectorXi predicted = predict_labels(valid.features, fit.theta);
    Eigen::Index wrong = 0;
    for (Eigen::Index i = 0; i < predicted.size(); ++i) {
      if (predicted[i] != valid.labels[i]) ++wrong;
    }
    const double error = static_cast<double>(wrong) / static_cast<double>(predicted.size());
    result.errors_per_beta.push_back(error);
    if (error < best_error) {  // strict: ties keep the smaller beta
      best_error = error;
      result.chosen_beta = beta;
    }
  }
  result.validation_error = best_error;
  return result;
}

}  // namespace pactran
