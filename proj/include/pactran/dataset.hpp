#pragma once

#include <Eigen/Core>
#include <vector>

namespace pactran {

/// Penultimate-layer features with downstream labels.
struct FeatureSet {
  Eigen::MatrixXd features;  // N x D
  Eigen::VectorXi labels;    // N, values in [0, num_classes)
  int num_classes = 0;       // K
};

/// Per-example source-head probabilities (rows need not be normalized for
/// every consumer; `normalized` records the observed state).
struct SourceDistribution {
  Eigen::MatrixXd probs;  // N x |Z|
  bool normalized = false;
};

struct DatasetReport {
  Eigen::Index num_examples = 0;
  Eigen::Index feature_dim = 0;
  int num_classes = 0;
  Eigen::Index num_source_classes = 0;  // 0 when no probs given
  std::vector<Eigen::Index> class_counts;
  std::vector<int> missing_classes;
  bool probs_normalized = false;  // rows sum to 1 within 1e-6
};

/// Consistency checks shared by every metric entry point. Throws
/// ValidationError on negative probabilities (naming the entry), labels out
/// of range, or row-count mismatches; missing classes are reported, not fatal.
DatasetReport validate_dataset(const FeatureSet& data,
                               const SourceDistribution* source = nullptr);

/// Row subset in index order (indices must be valid rows).
FeatureSet take_rows(const FeatureSet& data, const std::vector<int>& indices);
SourceDistribution take_rows(const SourceDistribution& source, const std::vector<int>& indices);

}  // namespace pactran
