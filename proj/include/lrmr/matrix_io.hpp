#pragma once

// Matrix fixtures on disk.
//
// CSV: one matrix row per line, comma-separated decimal values printed with
// 17 significant digits. A JSON manifest {"rows", "cols", "path"} points at a
// CSV file; a relative path is resolved against the manifest's directory.

#include <filesystem>

#include "json.hpp"

#include "lrmr/mat.hpp"

namespace lrmr {

void write_csv(const Mat& x, const std::filesystem::path& path);
Mat read_csv(const std::filesystem::path& path);

/// Writes `csv_path` and a manifest at `manifest_path` referencing it (relative
/// to the manifest's directory when possible). Returns the manifest object.
nlohmann::json write_manifest(const Mat& x, const std::filesystem::path& manifest_path,
                              const std::filesystem::path& csv_path);
/// Manifest object for a matrix already written to `csv_path`.
nlohmann::json manifest_json(const Mat& x, const std::filesystem::path& csv_path);
Mat read_manifest(const std::filesystem::path& manifest_path);
/// Loads a manifest object; relative paths resolve against `base_dir`.
Mat load_manifest(const nlohmann::json& manifest, const std::filesystem::path& base_dir);

}  // namespace lrmr
