#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "pactran/classifier.hpp"
#include "pactran/errors.hpp"
#include "pactran/harness.hpp"
#include "pactran/manifest.hpp"
#include "pactran/special.hpp"
#include "pactran/tensor_io.hpp"

namespace pactran {

namespace {

// Distinct per-stream salts so the shared geometry, the labels, and each
// checkpoint draw from independent chains of the same spec seed.
constexpr std::uint64_t kMeansSalt = 0x6d65616e73ull;

Eigen::MatrixXd unit_sphere_means(int num_classes, int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd means(num_classes, dim);
  for (int k = 0; k < num_classes; ++k) {
    double norm_sq = 0.0;
    do {
      for (int d = 0; d < dim; ++d) means(k, d) = normal(rng);
      norm_sq = means.row(k).squaredNorm();
    } while (norm_sq < 1e-12);
    means.row(k) /= std::sqrt(norm_sq);
  }
  return means;
}

Eigen::MatrixXd noisy_features(const Eigen::MatrixXd& means, const Eigen::VectorXi& labels,
                               double noise, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd features(labels.size(), means.cols());
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    for (Eigen::Index d = 0; d < means.cols(); ++d) {
      features(i, d) = (1.0 - noise) * means(labels[i], d) + noise * normal(rng);
    }
  }
  return features;
}

Eigen::MatrixXd source_probabilities(const Eigen::MatrixXd& features, int num_source_classes,
                                     double noise) {
  const Eigen::Index cols = std::min<Eigen::Index>(features.cols(), num_source_classes);
  Eigen::MatrixXd logits = Eigen::MatrixXd::Zero(features.rows(), num_source_classes);
  logits.leftCols(cols) = (1.0 - noise) * features.leftCols(cols);
  Eigen::MatrixXd probs(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    probs.row(i) = softmax_from_logits(logits.row(i).transpose()).transpose();
  }
  return probs;
}

}  // namespace

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& doc) {
  SyntheticSpec spec;
  if (doc.contains("num_checkpoints")) spec.num_checkpoints = doc["num_checkpoints"].get<int>();
  if (doc.contains("num_train")) spec.num_train = doc["num_train"].get<int>();
  if (doc.contains("num_test")) spec.num_test = doc["num_test"].get<int>();
  if (doc.contains("feature_dim")) spec.feature_dim = doc["feature_dim"].get<int>();
  if (doc.contains("num_classes")) spec.num_classes = doc["num_classes"].get<int>();
  if (doc.contains("num_source_classes")) {
    spec.num_source_classes = doc["num_source_classes"].get<int>();
  }
  if (doc.contains("noise_levels")) {
    spec.noise_levels = doc["noise_levels"].get<std::vector<double>>();
  }
  if (doc.contains("seed")) spec.seed = doc["seed"].get<std::uint64_t>();
  return spec;
}

SyntheticSummary generate_synthetic_benchmark(const SyntheticSpec& spec,
                                              const std::filesystem::path& out_dir) {
  if (spec.num_checkpoints < 1) throw ValidationError("synthetic: num_checkpoints must be >= 1");
  if (spec.num_classes < 2) throw ValidationError("synthetic: num_classes must be >= 2");
  if (spec.feature_dim < 1) throw ValidationError("synthetic: feature_dim must be >= 1");
  if (spec.num_train < 2 * spec.num_classes) {
    throw ValidationError("synthetic: num_train must cover every class twice");
  }
  if (spec.num_test < 1) throw ValidationError("synthetic: num_test must be >= 1");

  std::vector<double> noise = spec.noise_levels;
  if (noise.empty()) {
    const int c = spec.num_checkpoints;
    for (int i = 0; i < c; ++i) {
      noise.push_back(c == 1 ? 0.25 : 0.25 + 0.65 * i / static_cast<double>(c - 1));
    }
  }
  if (static_cast<int>(noise.size()) != spec.num_checkpoints) {
    throw ValidationError("synthetic: noise_levels length must equal num_checkpoints");
  }
  for (size_t i = 0; i < noise.size(); ++i) {
    if (!(noise[i] >= 0.0 && noise[i] < 1.0)) {
      throw ValidationError("synthetic: noise levels must lie in [0, 1)");
    }
    if (i > 0 && !(noise[i] > noise[i - 1])) {
      throw ValidationError("synthetic: noise levels must increase strictly");
    }
  }
  const int num_source = spec.num_source_classes > 0 ? spec.num_source_classes : spec.num_classes;

  std::filesystem::create_directories(out_dir);

  std::mt19937_64 means_rng(mix_seed(spec.seed, kMeansSalt));
  const Eigen::MatrixXd means = unit_sphere_means(spec.num_classes, spec.feature_dim, means_rng);

  Eigen::VectorXi train_labels(spec.num_train);
  for (int i = 0; i < spec.num_train; ++i) train_labels[i] = i % spec.num_classes;
  Eigen::VectorXi test_labels(spec.num_test);
  for (int i = 0; i < spec.num_test; ++i) test_labels[i] = i % spec.num_classes;
  const std::filesystem::path labels_path = out_dir / "labels.ptrn";
  save_int_vector(train_labels, labels_path);

  SyntheticSummary summary;
  summary.noise_levels = noise;
  CheckpointManifest manifest;
  for (int c = 0; c < spec.num_checkpoints; ++c) {
    char id[32];
    std::snprintf(id, sizeof(id), "ckpt%02d", c);
    std::mt19937_64 rng(mix_seed(spec.seed, static_cast<std::uint64_t>(c) + 1));
    const Eigen::MatrixXd train = noisy_features(means, train_labels, noise[c], rng);
    const Eigen::MatrixXd test = noisy_features(means, test_labels, noise[c], rng);
    const Eigen::MatrixXd probs = source_probabilities(train, num_source, noise[c]);

    const SoftmaxFit fit = fit_l2_softmax(train, train_labels, spec.num_classes,
                                          10.0 * static_cast<double>(spec.num_train));
    const Eigen::VectorXi predicted = predict_labels(test, fit.theta);
    double wrong = 0.0;
    for (int i = 0; i < spec.num_test; ++i) wrong += predicted[i] != test_labels[i] ? 1.0 : 0.0;
    const double test_error = wrong / static_cast<double>(spec.num_test);

    const std::filesystem::path features_path =
        out_dir / (std::string("features_") + id + ".ptrn");
    const std::filesystem::path probs_path = out_dir / (std::string("probs_") + id + ".ptrn");
    save_matrix(train, features_path);
    save_matrix(probs, probs_path);

    CheckpointEntry entry;
    entry.id = id;
    entry.features_path = features_path;
    entry.labels_path = labels_path;
    entry.source_probs_path = probs_path;
    entry.test_error = test_error;
    manifest.entries.push_back(std::move(entry));
    summary.test_errors.push_back(test_error);
  }
  summary.manifest_path = out_dir / "manifest.json";
  save_manifest(manifest, summary.manifest_path);
  return summary;
}

}  // namespace pactran
