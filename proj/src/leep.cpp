#include "pactran/leep.hpp"

#include <cmath>
#include <limits>

#include "pactran/errors.hpp"
#include "pactran/gmm.hpp"
#include "pactran/pca.hpp"
#include "pactran/special.hpp"

namespace pactran {

namespace {

void require_normalized(const DatasetReport& report, const char* fn) {
  if (!report.probs_normalized) {
    throw ValidationError(std::string(fn) + ": source probability rows must sum to 1");
  }
}

FeatureSet label_view(const Eigen::VectorXi& labels, int num_classes) {
  // validate_dataset wants a FeatureSet; a zero-width matrix carries labels.
  FeatureSet view;
  view.features = Eigen::MatrixXd::Zero(labels.size(), 1);
  view.labels = labels;
  view.num_classes = num_classes;
  return view;
}

}  // namespace

Eigen::MatrixXd leep_conditional(const SourceDistribution& source, const Eigen::VectorXi& labels,
                                 int num_classes, std::vector<int>* empty_columns) {
  const FeatureSet view = label_view(labels, num_classes);
  validate_dataset(view, &source);
  const Eigen::Index n = labels.size();
  const Eigen::Index z_count = source.probs.cols();

  // Joint p(y, z) = (1/N) sum_i M(x_i)_z [y_i = y].
  Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(num_classes, z_count);
  for (Eigen::Index i = 0; i < n; ++i) {
    joint.row(labels[i]) += source.probs.row(i) / static_cast<double>(n);
  }
  if (empty_columns) empty_columns->clear();
  for (Eigen::Index z = 0; z < z_count; ++z) {
    const double mass = joint.col(z).sum();
    if (mass > 0.0) {
      joint.col(z) /= mass;
    } else {
      joint.col(z).setConstant(1.0 / num_classes);
      if (empty_columns) empty_columns->push_back(static_cast<int>(z));
    }
  }
  return joint;
}

LeepResult leep_score(const SourceDistribution& source, const Eigen::VectorXi& labels,
                      int num_classes) {
  const FeatureSet view = label_view(labels, num_classes);
  const DatasetReport report = validate_dataset(view, &source);
  require_normalized(report, "leep_score");

  LeepResult result;
  const Eigen::MatrixXd conditional =
      leep_conditional(source, labels, num_classes, &result.empty_columns);
  const Eigen::Index n = labels.size();
  const Eigen::Index z_count = source.probs.cols();
  std::vector<double> terms(z_count);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index z = 0; z < z_count; ++z) {
      terms[z] = conditional(labels[i], z) * source.probs(i, z);
    }
    const double inner = sum_sorted(terms);
    if (inner <= 0.0) {
      result.degenerate = true;
      result.score = -std::numeric_limits<double>::infinity();
      return result;
    }
    total += std::log(inner);
  }
  result.score = total / static_cast<double>(n);
  return result;
}

double nce_score(const SourceDistribution& source, const Eigen::VectorXi& labels,
                 int num_classes) {
  const FeatureSet view = label_view(labels, num_classes);
  validate_dataset(view, &source);
  const Eigen::Index n = labels.size();
  const Eigen::Index z_count = source.probs.cols();

  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(num_classes, z_count);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index z = 1; z < z_count; ++z) {
      if (source.probs(i, z) > source.probs(i, best)) best = z;
    }
    counts(labels[i], best) += 1.0;
  }
  // -H(Y|Z) = sum_{z,y} p(y,z) log(p(y|z)); 0 log 0 = 0.
  double score = 0.0;
  for (Eigen::Index z = 0; z < z_count; ++z) {
    const double column_mass = counts.col(z).sum();
    if (column_mass == 0.0) continue;
    for (int y = 0; y < num_classes; ++y) {
      const double c = counts(y, z);
      if (c > 0.0) {
        score += (c / static_cast<double>(n)) * std::log(c / column_mass);
      }
    }
  }
  return score;
}

NleepResult nleep_score(const FeatureSet& data, double energy_fraction, int num_components,
                        std::uint64_t seed) {
  const DatasetReport report = validate_dataset(data);
  const int components = num_components > 0 ? num_components : data.num_classes;
  if (report.num_examples < components) {
    throw ValidationError("nleep_score: fewer examples than mixture components");
  }

  NleepResult result;
  const PcaModel pca = pca_fit(data.features, energy_fraction);
  result.pca_degenerate = pca.degenerate;
  result.reduced_dim = static_cast<int>(pca.components.rows());
  const Eigen::MatrixXd reduced = pca_transform(pca, data.features);

  const GmmModel gmm = gmm_fit(reduced, components, seed);
  result.gmm_log_likelihood = gmm.log_likelihood;

  SourceDistribution posterior;
  posterior.probs = gmm_posterior(gmm, reduced);
  posterior.normalized = true;
  result.score = leep_score(posterior, data.labels, data.num_classes).score;
  return result;
}

}  // namespace pactran
