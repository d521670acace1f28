#include "ei/json_io.hpp"

#include <set>

#include "ei/error.hpp"

namespace ei::json_io {
namespace {

std::string child(const std::string& path, std::string_view key) { return path + "/" + std::string(key); }

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& path) {
    for (const auto& [k, _] : obj.items())
        if (!known.count(k)) throw SchemaError("schema violation: unknown field '" + child(path, k) + "'");
}

int as_int32(const json& v, const std::string& path) {
    const auto x = as_int(v, path);
    if (x < -2147483647LL || x > 2147483647LL) throw SchemaError("schema violation: integer out of range at '" + path + "'");
    return static_cast<int>(x);
}

}  // namespace

const json& require(const json& obj, std::string_view key, const std::string& path) {
    if (!obj.is_object()) throw SchemaError("schema violation: expected an object at '" + path + "'");
    auto it = obj.find(key);
    if (it == obj.end()) throw SchemaError("schema violation: missing required field '" + child(path, key) + "'");
    return *it;
}

const json* optional(const json& obj, std::string_view key, const std::string& path) {
    if (!obj.is_object()) throw SchemaError("schema violation: expected an object at '" + path + "'");
    auto it = obj.find(key);
    return it == obj.end() || it->is_null() ? nullptr : &*it;
}

double as_double(const json& v, const std::string& path) {
    if (!v.is_number()) throw SchemaError("schema violation: expected a number at '" + path + "'");
    return v.get<double>();
}

long long as_int(const json& v, const std::string& path) {
    if (!v.is_number_integer()) throw SchemaError("schema violation: expected an integer at '" + path + "'");
    return v.get<long long>();
}

std::size_t as_size(const json& v, const std::string& path) {
    const auto x = as_int(v, path);
    if (x < 0) throw SchemaError("schema violation: expected a non-negative integer at '" + path + "'");
    return static_cast<std::size_t>(x);
}

std::string as_string(const json& v, const std::string& path) {
    if (!v.is_string()) throw SchemaError("schema violation: expected a string at '" + path + "'");
    return v.get<std::string>();
}

const json& as_array(const json& v, const std::string& path) {
    if (!v.is_array()) throw SchemaError("schema violation: expected an array at '" + path + "'");
    return v;
}

const json& as_object(const json& v, const std::string& path) {
    if (!v.is_object()) throw SchemaError("schema violation: expected an object at '" + path + "'");
    return v;
}

Vector as_vector(const json& v, const std::string& path) {
    as_array(v, path);
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = as_double(v[i], child(path, std::to_string(i)));
    return out;
}

Matrix as_matrix(const json& v, const std::string& path) {
    as_array(v, path);
    if (v.empty()) return Matrix(0, 0);
    const auto cols = as_array(v[0], child(path, "0")).size();
    Matrix out(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < v.size(); ++r) {
        const auto p = child(path, std::to_string(r));
        const auto& row = as_array(v[r], p);
        if (row.size() != cols) throw SchemaError("schema violation: ragged matrix row at '" + p + "'");
        for (std::size_t c = 0; c < cols; ++c)
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = as_double(row[c], child(p, std::to_string(c)));
    }
    return out;
}

json from_vector(const Vector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

json from_matrix(const Matrix& m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(from_vector(m.row(r).transpose()));
    return out;
}

json learner_spec_to_json(const LearnerSpec& spec) {
    json params = json::object();
    std::visit(
        [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, LogisticParams>) {
                params = {{"learning_rate", p.learning_rate}, {"iterations", p.iterations}, {"l2", p.l2}};
            } else if constexpr (std::is_same_v<P, TreeParams>) {
                params = {{"max_depth", p.max_depth}, {"min_leaf", p.min_leaf}};
            } else if constexpr (std::is_same_v<P, ForestParams>) {
                params = {{"n_trees", p.n_trees}, {"max_depth", p.max_depth}, {"min_leaf", p.min_leaf},
                          {"max_features", p.max_features}};
            } else if constexpr (std::is_same_v<P, KnnParams>) {
                params = {{"k", p.k}};
            } else if constexpr (std::is_same_v<P, GnbParams>) {
                params = {{"var_floor", p.var_floor}};
            } else if constexpr (std::is_same_v<P, ConstantParams>) {
                params = {{"value", p.value}};
            }
        },
        spec.params);
    return {{"algorithm", std::string(algorithm_name(spec.params))}, {"name", spec.name}, {"params", params}};
}

LearnerSpec learner_spec_from_json(const json& v, const std::string& path, bool strict) {
    as_object(v, path);
    if (strict) reject_unknown(v, {"algorithm", "name", "params"}, path);
    const auto algorithm = as_string(require(v, "algorithm", path), child(path, "algorithm"));
    std::string name;
    if (auto* n = optional(v, "name", path)) name = as_string(*n, child(path, "name"));
    LearnerSpec spec;
    try {
        spec = make_learner(algorithm, name);
    } catch (const UsageError& e) {
        throw SchemaError(std::string(e.what()) + " at '" + child(path, "algorithm") + "'");
    }

    static const json empty = json::object();
    const auto ppath = child(path, "params");
    const json* pp = optional(v, "params", path);
    const json& params = pp ? as_object(*pp, ppath) : empty;
    auto get_d = [&](const char* key, double& out) {
        if (auto* x = optional(params, key, ppath)) out = as_double(*x, child(ppath, key));
    };
    auto get_i = [&](const char* key, int& out) {
        if (auto* x = optional(params, key, ppath)) out = as_int32(*x, child(ppath, key));
    };
    std::visit(
        [&](auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, LogisticParams>) {
                if (strict) reject_unknown(params, {"learning_rate", "iterations", "l2"}, ppath);
                get_d("learning_rate", p.learning_rate);
                get_i("iterations", p.iterations);
                get_d("l2", p.l2);
            } else if constexpr (std::is_same_v<P, TreeParams>) {
                if (strict) reject_unknown(params, {"max_depth", "min_leaf"}, ppath);
                get_i("max_depth", p.max_depth);
                get_i("min_leaf", p.min_leaf);
            } else if constexpr (std::is_same_v<P, ForestParams>) {
                if (strict) reject_unknown(params, {"n_trees", "max_depth", "min_leaf", "max_features"}, ppath);
                get_i("n_trees", p.n_trees);
                get_i("max_depth", p.max_depth);
                get_i("min_leaf", p.min_leaf);
                get_i("max_features", p.max_features);
            } else if constexpr (std::is_same_v<P, KnnParams>) {
                if (strict) reject_unknown(params, {"k"}, ppath);
                get_i("k", p.k);
            } else if constexpr (std::is_same_v<P, GnbParams>) {
                if (strict) reject_unknown(params, {"var_floor"}, ppath);
                get_d("var_floor", p.var_floor);
            } else if constexpr (std::is_same_v<P, ConstantParams>) {
                if (strict) reject_unknown(params, {"value"}, ppath);
                get_d("value", p.value);
            } else {
                if (strict) reject_unknown(params, {}, ppath);
            }
        },
        spec.params);
    try {
        check_params(spec);
    } catch (const UsageError& e) {
        throw SchemaError(std::string(e.what()) + " at '" + path + "'");
    }
    return spec;
}

json ensemble_spec_to_json(const EnsembleSpec& spec) {
    json out = {{"kind", std::string(ensemble_kind_name(spec.kind))}, {"id", spec.id}};
    if (spec.kind == EnsembleKind::stacker) out["meta"] = learner_spec_to_json(spec.meta);
    if (spec.kind == EnsembleKind::greedy) {
        out["metric"] = std::string(metric_name(spec.metric));
        out["bags"] = spec.bags;
        out["max_iter"] = spec.max_iter;
    }
    return out;
}

EnsembleSpec ensemble_spec_from_json(const json& v, const std::string& path, bool strict) {
    as_object(v, path);
    if (strict) reject_unknown(v, {"kind", "id", "meta", "metric", "bags", "max_iter"}, path);
    const auto kind_name = as_string(require(v, "kind", path), child(path, "kind"));
    EnsembleSpec spec;
    try {
        spec.kind = parse_ensemble_kind(kind_name);
    } catch (const UsageError& e) {
        throw SchemaError(std::string(e.what()) + " at '" + child(path, "kind") + "'");
    }
    if (auto* m = optional(v, "meta", path)) spec.meta = learner_spec_from_json(*m, child(path, "meta"), strict);
    if (auto* m = optional(v, "metric", path)) {
        try {
            spec.metric = parse_metric(as_string(*m, child(path, "metric")));
        } catch (const UsageError& e) {
            throw SchemaError(std::string(e.what()) + " at '" + child(path, "metric") + "'");
        }
    }
    if (auto* b = optional(v, "bags", path)) spec.bags = as_size(*b, child(path, "bags"));
    if (auto* b = optional(v, "max_iter", path)) spec.max_iter = as_size(*b, child(path, "max_iter"));
    if (auto* id = optional(v, "id", path)) {
        spec.id = as_string(*id, child(path, "id"));
    } else {
        switch (spec.kind) {
            case EnsembleKind::mean: spec.id = "mean"; break;
            case EnsembleKind::median: spec.id = "median"; break;
            case EnsembleKind::stacker: spec.id = "stacker_" + spec.meta.name; break;
            case EnsembleKind::greedy: spec.id = "greedy_" + std::string(metric_name(spec.metric)); break;
        }
    }
    if (spec.bags < 1) throw SchemaError("schema violation: bags must be >= 1 at '" + child(path, "bags") + "'");
    return spec;
}

json summary_to_json(const SummaryTable& table) {
    json out = json::array();
    for (const auto& r : table)
        out.push_back({{"name", r.name},
                       {"auc", r.auc},
                       {"fmax", r.fmax},
                       {"fmax_threshold", r.fmax_threshold},
                       {"precision_at_fmax", r.precision_at_fmax},
                       {"recall_at_fmax", r.recall_at_fmax},
                       {"n_evaluated", r.n_evaluated}});
    return out;
}

SummaryTable summary_from_json(const json& v, const std::string& path) {
    SummaryTable table;
    as_array(v, path);
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto p = child(path, std::to_string(i));
        const auto& r = v[i];
        table.push_back({as_string(require(r, "name", p), child(p, "name")),
                         as_double(require(r, "auc", p), child(p, "auc")),
                         as_double(require(r, "fmax", p), child(p, "fmax")),
                         as_double(require(r, "fmax_threshold", p), child(p, "fmax_threshold")),
                         as_double(require(r, "precision_at_fmax", p), child(p, "precision_at_fmax")),
                         as_double(require(r, "recall_at_fmax", p), child(p, "recall_at_fmax")),
                         as_size(require(r, "n_evaluated", p), child(p, "n_evaluated"))});
    }
    return table;
}

}  // namespace ei::json_io
