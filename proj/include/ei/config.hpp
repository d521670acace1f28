#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ei/dataset.hpp"
#include "ei/engine.hpp"
#include "ei/ensemble.hpp"

namespace ei {

struct InterpretOptions {
    std::string ensemble;  // empty: best ensemble by summary AUC, else the first trained
    Metric metric = Metric::auc;
    std::size_t n_repeats = 10;
    Seed seed = 0;
};

/// Run configuration as read from a JSON config file. Relative paths are
/// resolved against the config file's directory.
struct RunConfig {
    std::optional<std::filesystem::path> manifest;
    std::optional<SyntheticSpec> synthetic;
    std::vector<LearnerSpec> learners = default_roster();  // for modalities without an explicit entry
    std::vector<std::pair<std::string, std::vector<LearnerSpec>>> per_modality;
    std::vector<EnsembleSpec> ensembles = default_ensembles();
    CvConfig cv;
    std::filesystem::path out_dir = ".";
    std::optional<std::size_t> workers;
    InterpretOptions interpretation;
};

/// Throws UsageError naming the offending field.
RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// {"n", "modalities": [{"features", "informative", "noise_std"}], "complementarity", "seed"}
SyntheticSpec parse_synthetic_spec(const nlohmann::json& doc, const std::string& path);
nlohmann::json synthetic_spec_to_json(const SyntheticSpec& spec);

/// Learners per dataset modality, in dataset order.
PredictorAssignment resolve_assignment(const RunConfig& cfg, const MultiModalDataset& ds);

/// Loads the manifest or generates the synthetic dataset; exactly one must be set.
MultiModalDataset load_config_dataset(const RunConfig& cfg);

}  // namespace ei
