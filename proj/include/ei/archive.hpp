#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "ei/engine.hpp"

namespace ei {

inline constexpr int kArchiveFormatVersion = 1;

/// Serializes the final-model portion of a fitted engine (plus its
/// summaries, when present) as a self-describing JSON document.
nlohmann::json archive_to_json(const EnsembleIntegration& ei);
EnsembleIntegration archive_from_json(const nlohmann::json& doc);

void save_model(const EnsembleIntegration& ei, const std::filesystem::path& path);

/// Throws SchemaError for malformed, truncated or unsupported archives.
/// Unknown fields are ignored.
EnsembleIntegration load_model(const std::filesystem::path& path);

nlohmann::json fitted_model_to_json(const FittedBaseModel& model);
FittedBaseModel fitted_model_from_json(const nlohmann::json& v, const std::string& path);

}  // namespace ei
