#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "ei/ensemble.hpp"
#include "ei/learners.hpp"
#include "ei/metrics.hpp"

namespace ei::json_io {

using nlohmann::json;

/// Child lookup that reports the JSON-pointer path of a missing or mistyped
/// field through SchemaError.
const json& require(const json& obj, std::string_view key, const std::string& path);
const json* optional(const json& obj, std::string_view key, const std::string& path);

double as_double(const json& v, const std::string& path);
long long as_int(const json& v, const std::string& path);
std::size_t as_size(const json& v, const std::string& path);
std::string as_string(const json& v, const std::string& path);
const json& as_array(const json& v, const std::string& path);
const json& as_object(const json& v, const std::string& path);

Vector as_vector(const json& v, const std::string& path);
Matrix as_matrix(const json& v, const std::string& path);  // array of equal-length rows
json from_vector(const Vector& v);
json from_matrix(const Matrix& m);

/// {"algorithm", "name", "params"}. With strict = true unknown parameter
/// names are rejected; missing ones take their defaults.
json learner_spec_to_json(const LearnerSpec& spec);
LearnerSpec learner_spec_from_json(const json& v, const std::string& path, bool strict);

/// {"kind", "id", "meta"?, "metric"?, "bags"?, "max_iter"?}
json ensemble_spec_to_json(const EnsembleSpec& spec);
EnsembleSpec ensemble_spec_from_json(const json& v, const std::string& path, bool strict);

json summary_to_json(const SummaryTable& table);
SummaryTable summary_from_json(const json& v, const std::string& path);

}  // namespace ei::json_io
