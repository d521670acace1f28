#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ei/dataset.hpp"

namespace ei {

struct ManifestEntry {
    std::string name;
    std::filesystem::path path;
};

/// Parsed manifest file. Relative paths are resolved against the manifest's
/// directory.
struct Manifest {
    std::vector<ManifestEntry> modalities;
    std::filesystem::path labels_path;  // empty when the manifest has none
    std::string id_column = "id";
    std::string label_column = "label";
};

Manifest read_manifest(const std::filesystem::path& path);

/// Loads and validates a labelled dataset. Rows follow the labels file;
/// modality rows are matched to labels by sample id.
MultiModalDataset load_manifest(const std::filesystem::path& path);

/// Features only, for scoring. Row order follows the labels file when the
/// manifest names one, otherwise the first modality file. Labels are left
/// empty.
MultiModalDataset load_features(const std::filesystem::path& path);

/// Writes one CSV per modality, labels.csv and manifest.json into `dir`.
/// Returns the manifest path.
std::filesystem::path write_dataset(const MultiModalDataset& ds, const std::filesystem::path& dir);

}  // namespace ei
