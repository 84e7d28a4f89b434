#include "pactran/dataset.hpp"

#include <cmath>
#include <string>

#include "pactran/errors.hpp"

namespace pactran {

DatasetReport validate_dataset(const FeatureSet& data, const SourceDistribution* source) {
  DatasetReport report;
  report.num_examples = data.features.rows();
  report.feature_dim = data.features.cols();
  report.num_classes = data.num_classes;
  if (report.num_examples == 0) throw ValidationError("validate_dataset: empty dataset");
  if (data.num_classes < 1) throw ValidationError("validate_dataset: num_classes must be >= 1");
  if (data.labels.size() != report.num_examples) {
    throw ValidationError("validate_dataset: labels row count " +
                          std::to_string(data.labels.size()) + " != features row count " +
                          std::to_string(report.num_examples));
  }
  if (!data.features.allFinite()) {
    throw ValidationError("validate_dataset: non-finite feature value");
  }
  report.class_counts.assign(data.num_classes, 0);
  for (Eigen::Index i = 0; i < data.labels.size(); ++i) {
    const int y = data.labels[i];
    if (y < 0 || y >= data.num_classes) {
      throw ValidationError("validate_dataset: label " + std::to_string(y) + " at row " +
                            std::to_string(i) + " outside [0, " +
                            std::to_string(data.num_classes) + ")");
    }
    ++report.class_counts[y];
  }
  for (int y = 0; y < data.num_classes; ++y) {
    if (report.class_counts[y] == 0) report.missing_classes.push_back(y);
  }
  if (source != nullptr) {
    report.num_source_classes = source->probs.cols();
    if (source->probs.rows() != report.num_examples) {
      throw ValidationError("validate_dataset: source probs row count " +
                            std::to_string(source->probs.rows()) + " != " +
                            std::to_string(report.num_examples));
    }
    report.probs_normalized = true;
    for (Eigen::Index i = 0; i < source->probs.rows(); ++i) {
      double row_sum = 0.0;
      for (Eigen::Index z = 0; z < source->probs.cols(); ++z) {
        const double p = source->probs(i, z);
        if (!std::isfinite(p) || p < 0.0) {
          throw ValidationError("validate_dataset: bad probability at row " + std::to_string(i) +
                                " column " + std::to_string(z));
        }
        row_sum += p;
      }
      if (std::abs(row_sum - 1.0) > 1e-6) report.probs_normalized = false;
    }
  }
  return report;
}

FeatureSet take_rows(const FeatureSet& data, const std::vector<int>& indices) {
  FeatureSet out;
  out.num_classes = data.num_classes;
  out.features.resize(static_cast<Eigen::Index>(indices.size()), data.features.cols());
  out.labels.resize(static_cast<Eigen::Index>(indices.size()));
  for (size_t i = 0; i < indices.size(); ++i) {
    const int row = indices[i];
    if (row < 0 || row >= data.features.rows()) {
      throw ValidationError("take_rows: index out of range");
    }
    out.features.row(static_cast<Eigen::Index>(i)) = data.features.row(row);
    out.labels[static_cast<Eigen::Index>(i)] = data.labels[row];
  }
  return out;
}

SourceDistribution take_rows(const SourceDistribution& source, const std::vector<int>& indices) {
  SourceDistribution out;
  out.normalized = source.normalized;
  out.probs.resize(static_cast<Eigen::Index>(indices.size()), source.probs.cols());
  for (size_t i = 0; i < indices.size(); ++i) {
    const int row = indices[i];
    if (row < 0 || row >= source.probs.rows()) {
      throw ValidationError("take_rows: index out of range");
    }
    out.probs.row(static_cast<Eigen::Index>(i)) = source.probs.row(row);
  }
  return out;
}

}  // namespace pactran
