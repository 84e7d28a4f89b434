#include "pactran/manifest.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "pactran/errors.hpp"

namespace pactran {

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  std::filesystem::path p(value);
  return p.is_absolute() ? p : base / p;
}

}  // namespace

CheckpointManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open manifest: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("manifest is not valid JSON: " + std::string(e.what()), 0);
  }
  if (!doc.contains("entries") || !doc["entries"].is_array()) {
    throw ValidationError("manifest missing \"entries\" array: " + path.string());
  }
  const std::filesystem::path base = path.parent_path();
  CheckpointManifest manifest;
  std::set<std::string> seen;
  for (const auto& item : doc["entries"]) {
    CheckpointEntry entry;
    if (!item.contains("id") || !item.contains("features") || !item.contains("labels")) {
      throw ValidationError("manifest entry needs id/features/labels: " + path.string());
    }
    entry.id = item["id"].get<std::string>();
    if (!seen.insert(entry.id).second) {
      throw ValidationError("duplicate checkpoint id \"" + entry.id + "\" in manifest");
    }
    entry.features_path = resolve(base, item["features"].get<std::string>());
    entry.labels_path = resolve(base, item["labels"].get<std::string>());
    if (item.contains("source_probs") && !item["source_probs"].is_null()) {
      entry.source_probs_path = resolve(base, item["source_probs"].get<std::string>());
    }
    if (item.contains("test_error") && !item["test_error"].is_null()) {
      entry.test_error = item["test_error"].get<double>();
    }
    for (const auto& p : {entry.features_path, entry.labels_path}) {
      if (!std::filesystem::exists(p)) {
        throw ValidationError("manifest references missing file: " + p.string());
      }
    }
    if (entry.source_probs_path && !std::filesystem::exists(*entry.source_probs_path)) {
      throw ValidationError("manifest references missing file: " +
                            entry.source_probs_path->string());
    }
    manifest.entries.push_back(std::move(entry));
  }
  if (manifest.entries.empty()) throw ValidationError("manifest has no entries: " + path.string());
  return manifest;
}

void save_manifest(const CheckpointManifest& manifest, const std::filesystem::path& path) {
  const std::filesystem::path base = path.parent_path();
  nlohmann::ordered_json doc;
  doc["entries"] = nlohmann::ordered_json::array();
  for (const auto& entry : manifest.entries) {
    nlohmann::ordered_json item;
    item["id"] = entry.id;
    item["features"] = std::filesystem::relative(entry.features_path, base).string();
    item["labels"] = std::filesystem::relative(entry.labels_path, base).string();
    if (entry.source_probs_path) {
      item["source_probs"] = std::filesystem::relative(*entry.source_probs_path, base).string();
    }
    if (entry.test_error) item["test_error"] = *entry.test_error;
    doc["entries"].push_back(std::move(item));
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ValidationError("cannot write manifest: " + path.string());
  out << doc.dump(2) << "\n";
}

}  // namespace pactran
