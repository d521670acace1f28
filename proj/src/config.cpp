#include "ei/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "ei/error.hpp"
#include "ei/json_io.hpp"
#include "ei/manifest.hpp"

namespace ei {
namespace {

using nlohmann::json;
using namespace json_io;

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& path) {
    for (const auto& [k, _] : obj.items())
        if (!known.count(k)) throw SchemaError("unknown config field '" + path + "/" + k + "'");
}

std::vector<LearnerSpec> learner_list(const json& v, const std::string& path) {
    std::vector<LearnerSpec> out;
    as_array(v, path);
    if (v.empty()) throw SchemaError("empty learner list at '" + path + "'");
    for (std::size_t i = 0; i < v.size(); ++i) {
        // Bare strings are shorthand for default parameters.
        if (v[i].is_string()) out.push_back(make_learner(v[i].get<std::string>()));
        else out.push_back(learner_spec_from_json(v[i], path + "/" + std::to_string(i), true));
    }
    return out;
}

RunConfig parse_impl(const json& doc, const std::filesystem::path& base) {
    RunConfig cfg;
    as_object(doc, "");
    reject_unknown(doc, {"manifest", "synthetic", "predictors", "ensembles", "cv", "out_dir", "workers", "interpretation"}, "");

    if (auto* m = optional(doc, "manifest", "")) cfg.manifest = resolve(base, as_string(*m, "/manifest"));
    if (auto* s = optional(doc, "synthetic", "")) cfg.synthetic = parse_synthetic_spec(*s, "/synthetic");
    if (cfg.manifest && cfg.synthetic) throw SchemaError("config names both 'manifest' and 'synthetic'; choose one");

    if (auto* p = optional(doc, "predictors", "")) {
        if (p->is_array()) {
            cfg.learners = learner_list(*p, "/predictors");
        } else {
            as_object(*p, "/predictors");
            for (const auto& [name, list] : p->items()) {
                if (name == "*") cfg.learners = learner_list(list, "/predictors/*");
                else cfg.per_modality.emplace_back(name, learner_list(list, "/predictors/" + name));
            }
        }
    }
    if (auto* e = optional(doc, "ensembles", "")) {
        as_array(*e, "/ensembles");
        cfg.ensembles.clear();
        for (std::size_t i = 0; i < e->size(); ++i) {
            const auto& item = (*e)[i];
            if (item.is_string()) cfg.ensembles.push_back(ensemble_spec_from_json({{"kind", item}}, "/ensembles/" + std::to_string(i), true));
            else cfg.ensembles.push_back(ensemble_spec_from_json(item, "/ensembles/" + std::to_string(i), true));
        }
    }
    if (auto* c = optional(doc, "cv", "")) {
        as_object(*c, "/cv");
        reject_unknown(*c, {"k_outer", "k_inner", "seed", "mode"}, "/cv");
        if (auto* x = optional(*c, "k_outer", "/cv")) cfg.cv.k_outer = as_size(*x, "/cv/k_outer");
        if (auto* x = optional(*c, "k_inner", "/cv")) cfg.cv.k_inner = as_size(*x, "/cv/k_inner");
        if (auto* x = optional(*c, "seed", "/cv")) {
            if (!x->is_number_integer() || (!x->is_number_unsigned() && x->get<long long>() < 0))
                throw SchemaError("expected an unsigned integer at '/cv/seed'");
            cfg.cv.seed = x->get<std::uint64_t>();
        }
        if (auto* x = optional(*c, "mode", "/cv")) cfg.cv.mode = parse_cv_mode(as_string(*x, "/cv/mode"));
    }
    if (auto* o = optional(doc, "out_dir", "")) cfg.out_dir = resolve(base, as_string(*o, "/out_dir"));
    if (auto* w = optional(doc, "workers", "")) cfg.workers = as_size(*w, "/workers");
    if (auto* in = optional(doc, "interpretation", "")) {
        as_object(*in, "/interpretation");
        reject_unknown(*in, {"ensemble", "metric", "n_repeats", "seed"}, "/interpretation");
        if (auto* x = optional(*in, "ensemble", "/interpretation")) cfg.interpretation.ensemble = as_string(*x, "/interpretation/ensemble");
        if (auto* x = optional(*in, "metric", "/interpretation")) cfg.interpretation.metric = parse_metric(as_string(*x, "/interpretation/metric"));
        if (auto* x = optional(*in, "n_repeats", "/interpretation")) cfg.interpretation.n_repeats = as_size(*x, "/interpretation/n_repeats");
        if (auto* x = optional(*in, "seed", "/interpretation")) cfg.interpretation.seed = static_cast<Seed>(as_size(*x, "/interpretation/seed"));
    }
    return cfg;
}

}  // namespace

SyntheticSpec parse_synthetic_spec(const json& doc, const std::string& path) {
    as_object(doc, path);
    reject_unknown(doc, {"n", "modalities", "complementarity", "seed"}, path);
    SyntheticSpec spec;
    spec.n = as_size(require(doc, "n", path), path + "/n");
    const auto& mods = as_array(require(doc, "modalities", path), path + "/modalities");
    for (std::size_t i = 0; i < mods.size(); ++i) {
        const auto p = path + "/modalities/" + std::to_string(i);
        reject_unknown(as_object(mods[i], p), {"features", "informative", "noise_std"}, p);
        SyntheticModality m;
        m.features = as_size(require(mods[i], "features", p), p + "/features");
        if (auto* x = optional(mods[i], "informative", p)) m.informative = as_size(*x, p + "/informative");
        if (auto* x = optional(mods[i], "noise_std", p)) m.noise_std = as_double(*x, p + "/noise_std");
        spec.modalities.push_back(m);
    }
    if (auto* x = optional(doc, "complementarity", path)) spec.complementarity = as_double(*x, path + "/complementarity");
    if (auto* x = optional(doc, "seed", path)) {
        if (!x->is_number_integer() || (!x->is_number_unsigned() && x->get<long long>() < 0))
            throw SchemaError("expected an unsigned integer at '" + path + "/seed'");
        spec.seed = x->get<std::uint64_t>();
    }
    return spec;
}

json synthetic_spec_to_json(const SyntheticSpec& spec) {
    json mods = json::array();
    for (const auto& m : spec.modalities)
        mods.push_back({{"features", m.features}, {"informative", m.informative}, {"noise_std", m.noise_std}});
    return {{"n", spec.n}, {"modalities", mods}, {"complementarity", spec.complementarity}, {"seed", spec.seed}};
}

RunConfig parse_run_config(const json& doc, const std::filesystem::path& base_dir) {
    try {
        return parse_impl(doc, base_dir);
    } catch (const SchemaError& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open config file: " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw UsageError("config " + path.string() + ": malformed JSON: " + e.what());
    }
    return parse_run_config(doc, path.parent_path());
}

PredictorAssignment resolve_assignment(const RunConfig& cfg, const MultiModalDataset& ds) {
    for (const auto& [name, _] : cfg.per_modality)
        if (ds.find_modality(name) == MultiModalDataset::npos)
            throw UsageError("config: predictors name unknown modality '" + name + "'");
    PredictorAssignment out;
    for (const auto& m : ds.modalities) {
        auto it = std::find_if(cfg.per_modality.begin(), cfg.per_modality.end(),
                               [&](const auto& p) { return p.first == m.name; });
        out.emplace_back(m.name, it == cfg.per_modality.end() ? cfg.learners : it->second);
    }
    return out;
}

MultiModalDataset load_config_dataset(const RunConfig& cfg) {
    if (cfg.manifest && cfg.synthetic) throw UsageError("config names both a manifest and a synthetic spec");
    if (cfg.manifest) return load_manifest(*cfg.manifest);
    if (cfg.synthetic) return generate_synthetic(*cfg.synthetic);
    throw UsageError("no data source: set 'manifest' or 'synthetic' in the config, or pass --manifest");
}

}  // namespace ei
