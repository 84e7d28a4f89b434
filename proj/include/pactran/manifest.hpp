#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace pactran {

/// One exported checkpoint: feature/label tensors plus optional source-head
/// probabilities and the measured transfer test error used for evaluation.
struct CheckpointEntry {
  std::string id;
  std::filesystem::path features_path;
  std::filesystem::path labels_path;
  std::optional<std::filesystem::path> source_probs_path;
  std::optional<double> test_error;
};

struct CheckpointManifest {
  std::vector<CheckpointEntry> entries;
};

/// JSON manifest; relative paths resolve against the manifest's directory.
/// Duplicate ids or missing referenced files throw ValidationError.
CheckpointManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const CheckpointManifest& manifest, const std::filesystem::path& path);

}  // namespace pactran
