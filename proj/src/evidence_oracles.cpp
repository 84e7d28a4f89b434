#include "pactran/evidence_oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "pactran/errors.hpp"
#include "pactran/pactran_metrics.hpp"
#include "pactran/special.hpp"

namespace pactran {

namespace {

double log_dirichlet_c(const Eigen::VectorXd& v) {
  double out = log_gamma(v.sum());
  for (Eigen::Index y = 0; y < v.size(); ++y) out -= log_gamma(v[y]);
  return out;
}

}  // namespace

double exact_log_evidence_dirichlet(const SourceDistribution& source,
                                    const Eigen::VectorXi& labels, int num_classes,
                                    Eigen::VectorXd alpha_prior) {
  FeatureSet view;
  view.features = Eigen::MatrixXd::Zero(labels.size(), 1);
  view.labels = labels;
  view.num_classes = num_classes;
  const DatasetReport report = validate_dataset(view, &source);
  if (!report.probs_normalized) {
    throw ValidationError("exact_log_evidence_dirichlet: source rows must sum to 1");
  }
  if (alpha_prior.size() == 0) alpha_prior = default_class_prior(labels, num_classes);

  const Eigen::Index n = labels.size();
  const Eigen::Index z_count = source.probs.cols();
  const double configs = std::pow(static_cast<double>(z_count), static_cast<double>(n));
  if (configs > 1e6) {
    throw ValidationError("exact_log_evidence_dirichlet: |Z|^N = " + std::to_string(configs) +
                          " exceeds the 1e6 enumeration budget");
  }
  const double log_c_prior = log_dirichlet_c(alpha_prior);

  std::vector<int> assignment(n, 0);
  std::vector<double> log_weights;
  log_weights.reserve(static_cast<size_t>(configs));
  Eigen::MatrixXd counts(num_classes, z_count);
  while (true) {
    double log_weight = 0.0;
    counts.setZero();
    for (Eigen::Index i = 0; i < n && std::isfinite(log_weight); ++i) {
      const double m = source.probs(i, assignment[i]);
      log_weight += m > 0.0 ? std::log(m) : -std::numeric_limits<double>::infinity();
      counts(labels[i], assignment[i]) += 1.0;
    }
    if (std::isfinite(log_weight)) {
      for (Eigen::Index z = 0; z < z_count; ++z) {
        log_weight += log_c_prior - log_dirichlet_c(alpha_prior + counts.col(z));
      }
      log_weights.push_back(log_weight);
    }
    // Mixed-radix increment over assignments.
    Eigen::Index pos = 0;
    while (pos < n) {
      if (++assignment[pos] < z_count) break;
      assignment[pos] = 0;
      ++pos;
    }
    if (pos == n) break;
  }
  if (log_weights.empty()) {
    throw NumericalError("exact_log_evidence_dirichlet: every configuration has zero mass");
  }
  return log_sum_exp(std::span<const double>(log_weights));
}

double gamma_model_log_likelihood(const SourceDistribution& source, const Eigen::VectorXi& labels,
                                  const Eigen::MatrixXd& v) {
  if (source.probs.rows() != labels.size()) {
    throw ValidationError("gamma_model_log_likelihood: row mismatch");
  }
  if (v.cols() != source.probs.cols()) {
    throw ValidationError("gamma_model_log_likelihood: V column mismatch");
  }
  const Eigen::VectorXd column_sums = v.colwise().sum();
  double total = 0.0;
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    const double numerator = source.probs.row(i).dot(v.row(labels[i]));
    const double denominator = source.probs.row(i).dot(column_sums);
    if (!(numerator > 0.0) || !(denominator > 0.0)) {
      throw NumericalError("gamma_model_log_likelihood: zero mass at row " + std::to_string(i));
    }
    total += std::log(numerator) - std::log(denominator);
  }
  return total;
}

McEvidence mc_log_evidence_gamma(const SourceDistribution& source, const Eigen::VectorXi& labels,
                                 int num_classes, Eigen::VectorXd a_prior, int num_samples,
                                 std::uint64_t seed) {
  FeatureSet view;
  view.features = Eigen::MatrixXd::Zero(labels.size(), 1);
  view.labels = labels;
  view.num_classes = num_classes;
  validate_dataset(view, &source);
  if (a_prior.size() == 0) a_prior = default_class_prior(labels, num_classes);
  if (num_samples < 2) throw ValidationError("mc_log_evidence_gamma: need >= 2 samples");

  std::mt19937_64 rng(seed);
  std::vector<std::gamma_distribution<double>> draw;
  draw.reserve(num_classes);
  for (int y = 0; y < num_classes; ++y) {
    draw.emplace_back(a_prior[y], 1.0);
  }

  const Eigen::Index z_count = source.probs.cols();
  std::vector<double> log_likelihoods(num_samples);
  Eigen::MatrixXd v(num_classes, z_count);
  for (int s = 0; s < num_samples; ++s) {
    for (int y = 0; y < num_classes; ++y) {
      for (Eigen::Index z = 0; z < z_count; ++z) v(y, z) = draw[y](rng);
    }
    log_likelihoods[s] = gamma_model_log_likelihood(source, labels, v);
  }

  const double peak = *std::max_element(log_likelihoods.begin(), log_likelihoods.end());
  double mean = 0.0;
  for (double ll : log_likelihoods) mean += std::exp(ll - peak);
  mean /= num_samples;
  double var = 0.0;
  for (double ll : log_likelihoods) {
    const double diff = std::exp(ll - peak) - mean;
    var += diff * diff;
  }
  var /= (num_samples - 1);

  McEvidence out;
  out.num_samples = num_samples;
  out.estimate = peak + std::log(mean);
  out.standard_error = var > 0.0 ? std::sqrt(var / num_samples) / mean : 0.0;
  return out;
}

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& at, double step) {
  Eigen::VectorXd grad(at.size());
  Eigen::VectorXd point = at;
  for (Eigen::Index j = 0; j < at.size(); ++j) {
    point[j] = at[j] + step;
    const double up = f(point);
    point[j] = at[j] - step;
    const double down = f(point);
    point[j] = at[j];
    grad[j] = (up - down) / (2.0 * step);
  }
  return grad;
}

double fd_hessian_trace(const std::function<double(const Eigen::VectorXd&)>& f,
                        const Eigen::VectorXd& at, double step) {
  const double center = f(at);
  Eigen::VectorXd point = at;
  double trace = 0.0;
  for (Eigen::Index j = 0; j < at.size(); ++j) {
    point[j] = at[j] + step;
    const double up = f(point);
    point[j] = at[j] - step;
    const double down = f(point);
    point[j] = at[j];
    trace += (up - 2.0 * center + down) / (step * step);
  }
  return trace;
}

}  // namespace pactran
