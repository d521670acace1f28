#include "ei/archive.hpp"

#include <fstream>
#include <sstream>

#include "ei/csv.hpp"
#include "ei/error.hpp"
#include "ei/json_io.hpp"

namespace ei {
namespace {

using nlohmann::json;
using namespace json_io;

std::string at(const std::string& path, std::string_view key) { return path + "/" + std::string(key); }
std::string at(const std::string& path, std::size_t i) { return path + "/" + std::to_string(i); }

json standardizer_json(const Standardizer& s) { return {{"mean", from_vector(s.mean)}, {"scale", from_vector(s.scale)}}; }

Standardizer standardizer_from(const json& v, const std::string& path) {
    return {as_vector(require(v, "mean", path), at(path, "mean")), as_vector(require(v, "scale", path), at(path, "scale"))};
}

json tree_json(const TreeState& t) {
    json nodes = json::array();
    for (const auto& n : t.nodes) nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right, n.value}));
    return {{"nodes", nodes}};
}

TreeState tree_from(const json& v, const std::string& path, std::size_t feature_count) {
    TreeState t;
    const auto p = at(path, "nodes");
    const auto& nodes = as_array(require(v, "nodes", path), p);
    if (nodes.empty()) throw SchemaError("schema violation: empty tree at '" + p + "'");
    const auto count = static_cast<long long>(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto np = at(p, i);
        const auto& n = as_array(nodes[i], np);
        if (n.size() != 5) throw SchemaError("schema violation: tree node needs 5 entries at '" + np + "'");
        TreeNode node;
        const auto feature = as_int(n[0], at(np, 0));
        node.threshold = as_double(n[1], at(np, 1));
        const auto left = as_int(n[2], at(np, 2));
        const auto right = as_int(n[3], at(np, 3));
        node.value = as_double(n[4], at(np, 4));
        if (feature >= static_cast<long long>(feature_count) || feature < -1)
            throw SchemaError("schema violation: feature index out of range at '" + np + "'");
        // Children always follow their parent, which also rules out cycles.
        const auto self = static_cast<long long>(i);
        if (feature >= 0 && (left <= self || right <= self || left >= count || right >= count))
            throw SchemaError("schema violation: bad child index at '" + np + "'");
        node.feature = static_cast<int>(feature);
        node.left = static_cast<int>(left);
        node.right = static_cast<int>(right);
        t.nodes.push_back(node);
    }
    return t;
}

json state_json(const LearnedState& state) {
    return std::visit(
        [](const auto& s) -> json {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, LogisticState>) {
                return {{"standardizer", standardizer_json(s.standardizer)}, {"weights", from_vector(s.weights)}, {"bias", s.bias}};
            } else if constexpr (std::is_same_v<S, TreeState>) {
                return tree_json(s);
            } else if constexpr (std::is_same_v<S, ForestState>) {
                json trees = json::array();
                for (const auto& t : s.trees) trees.push_back(tree_json(t));
                return {{"trees", trees}};
            } else if constexpr (std::is_same_v<S, KnnState>) {
                return {{"standardizer", standardizer_json(s.standardizer)},
                        {"points", from_matrix(s.points)},
                        {"labels", s.labels},
                        {"k", s.k}};
            } else if constexpr (std::is_same_v<S, GnbState>) {
                return {{"mean", json::array({from_vector(s.mean[0]), from_vector(s.mean[1])})},
                        {"variance", json::array({from_vector(s.variance[0]), from_vector(s.variance[1])})},
                        {"prior_positive", s.prior_positive}};
            } else if constexpr (std::is_same_v<S, ConstantState>) {
                return {{"value", s.value}};
            } else {
                return {{"seen", from_matrix(s.seen)}};
            }
        },
        state);
}

void check_width(const Vector& v, std::size_t f, const std::string& path) {
    if (static_cast<std::size_t>(v.size()) != f)
        throw SchemaError("schema violation: expected " + std::to_string(f) + " entries at '" + path + "'");
}

LearnedState state_from(const LearnerSpec& spec, const json& v, const std::string& path, std::size_t f) {
    as_object(v, path);
    const auto alg = algorithm_name(spec.params);
    if (alg == "logistic") {
        LogisticState s;
        s.standardizer = standardizer_from(require(v, "standardizer", path), at(path, "standardizer"));
        s.weights = as_vector(require(v, "weights", path), at(path, "weights"));
        s.bias = as_double(require(v, "bias", path), at(path, "bias"));
        check_width(s.standardizer.mean, f, at(path, "standardizer/mean"));
        check_width(s.standardizer.scale, f, at(path, "standardizer/scale"));
        check_width(s.weights, f, at(path, "weights"));
        return s;
    }
    if (alg == "tree") return tree_from(v, path, f);
    if (alg == "forest") {
        ForestState s;
        const auto p = at(path, "trees");
        const auto& trees = as_array(require(v, "trees", path), p);
        if (trees.empty()) throw SchemaError("schema violation: forest without trees at '" + p + "'");
        for (std::size_t i = 0; i < trees.size(); ++i) s.trees.push_back(tree_from(trees[i], at(p, i), f));
        return s;
    }
    if (alg == "knn") {
        KnnState s;
        s.standardizer = standardizer_from(require(v, "standardizer", path), at(path, "standardizer"));
        s.points = as_matrix(require(v, "points", path), at(path, "points"));
        const auto lp = at(path, "labels");
        const auto& labels = as_array(require(v, "labels", path), lp);
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const auto y = as_int(labels[i], at(lp, i));
            if (y != 0 && y != 1) throw SchemaError("schema violation: label outside {0,1} at '" + at(lp, i) + "'");
            s.labels.push_back(static_cast<int>(y));
        }
        const auto k = as_int(require(v, "k", path), at(path, "k"));
        if (k < 1) throw SchemaError("schema violation: k must be >= 1 at '" + at(path, "k") + "'");
        s.k = static_cast<int>(k);
        check_width(s.standardizer.mean, f, at(path, "standardizer/mean"));
        check_width(s.standardizer.scale, f, at(path, "standardizer/scale"));
        if (s.points.rows() == 0 || static_cast<std::size_t>(s.points.cols()) != f ||
            static_cast<std::size_t>(s.points.rows()) != s.labels.size())
            throw SchemaError("schema violation: inconsistent stored points at '" + at(path, "points") + "'");
        return s;
    }
    if (alg == "gnb") {
        GnbState s;
        for (const char* key : {"mean", "variance"}) {
            const auto p = at(path, key);
            const auto& pair = as_array(require(v, key, path), p);
            if (pair.size() != 2) throw SchemaError("schema violation: expected two classes at '" + p + "'");
            auto* dst = std::string_view(key) == "mean" ? s.mean : s.variance;
            for (std::size_t c = 0; c < 2; ++c) {
                dst[c] = as_vector(pair[c], at(p, c));
                check_width(dst[c], f, at(p, c));
            }
        }
        s.prior_positive = as_double(require(v, "prior_positive", path), at(path, "prior_positive"));
        return s;
    }
    if (alg == "constant") return ConstantState{as_double(require(v, "value", path), at(path, "value"))};
    LeakProbeState s;
    s.seen = as_matrix(require(v, "seen", path), at(path, "seen"));
    return s;
}

json ensemble_json(const EnsembleModel& m) {
    json model = {{"column_count", m.column_count}};
    if (m.stacker) model["stacker"] = fitted_model_to_json(*m.stacker);
    if (m.spec.kind == EnsembleKind::greedy) {
        model["selection"] = m.selection;
        model["trace"] = m.trace;
    }
    return {{"spec", ensemble_spec_to_json(m.spec)}, {"model", model}};
}

EnsembleModel ensemble_from(const json& v, const std::string& path, std::size_t columns) {
    EnsembleModel m;
    m.spec = ensemble_spec_from_json(require(v, "spec", path), at(path, "spec"), false);
    const auto mp = at(path, "model");
    const auto& model = as_object(require(v, "model", path), mp);
    m.column_count = as_size(require(model, "column_count", mp), at(mp, "column_count"));
    if (m.column_count != columns)
        throw SchemaError("schema violation: column_count differs from column_keys at '" + at(mp, "column_count") + "'");
    if (m.spec.kind == EnsembleKind::stacker) {
        m.stacker = fitted_model_from_json(require(model, "stacker", mp), at(mp, "stacker"));
        if (m.stacker->feature_count != columns)
            throw SchemaError("schema violation: stacker width differs from column count at '" + at(mp, "stacker") + "'");
    }
    if (m.spec.kind == EnsembleKind::greedy) {
        const auto sp = at(mp, "selection");
        const auto& sel = as_array(require(model, "selection", mp), sp);
        if (sel.empty()) throw SchemaError("schema violation: empty greedy selection at '" + sp + "'");
        for (std::size_t i = 0; i < sel.size(); ++i) {
            const auto c = as_size(sel[i], at(sp, i));
            if (c >= columns) throw SchemaError("schema violation: selection out of range at '" + at(sp, i) + "'");
            m.selection.push_back(c);
        }
        if (auto* tr = optional(model, "trace", mp)) {
            const auto t = as_vector(*tr, at(mp, "trace"));
            m.trace.assign(t.data(), t.data() + t.size());
        }
    }
    return m;
}

}  // namespace

json fitted_model_to_json(const FittedBaseModel& model) {
    auto out = learner_spec_to_json(model.spec);
    out["feature_count"] = model.feature_count;
    out["parameters"] = state_json(model.state);
    return out;
}

FittedBaseModel fitted_model_from_json(const json& v, const std::string& path) {
    FittedBaseModel m;
    m.spec = learner_spec_from_json(v, path, false);
    m.feature_count = as_size(require(v, "feature_count", path), at(path, "feature_count"));
    if (m.feature_count == 0) throw SchemaError("schema violation: feature_count must be positive at '" + path + "'");
    m.state = state_from(m.spec, require(v, "parameters", path), at(path, "parameters"), m.feature_count);
    return m;
}

json archive_to_json(const EnsembleIntegration& ei) {
    const auto& fm = ei.final_model();
    const auto& cv = ei.cv();
    json doc;
    doc["format"] = "ei-model-archive";
    doc["format_version"] = kArchiveFormatVersion;
    doc["cv"] = {{"k_outer", cv.k_outer}, {"k_inner", cv.k_inner}, {"seed", cv.seed}, {"mode", std::string(cv_mode_name(cv.mode))}};

    json mods = json::array();
    for (std::size_t m = 0; m < fm.modality_names.size(); ++m) {
        json learners = json::array();
        for (const auto& model : fm.base_models[m]) learners.push_back(fitted_model_to_json(model));
        mods.push_back({{"name", fm.modality_names[m]}, {"feature_names", fm.feature_names[m]}, {"learners", learners}});
    }
    doc["modalities"] = mods;

    json keys = json::array();
    for (const auto& k : fm.column_keys) keys.push_back({{"modality", k.modality}, {"learner", k.learner}});
    doc["column_keys"] = keys;
    doc["training"] = {{"sample_ids", fm.sample_ids}, {"labels", fm.labels}, {"scores", from_matrix(fm.training.scores)}};

    json ens = json::array();
    for (const auto& e : fm.ensembles) ens.push_back(ensemble_json(e));
    doc["ensembles"] = ens;

    json base = nullptr, ensemble = nullptr;
    try {
        base = summary_to_json(ei.base_summary());
    } catch (const UsageError&) {
    }
    try {
        ensemble = summary_to_json(ei.ensemble_summary());
    } catch (const UsageError&) {
    }
    doc["base_summary"] = base;
    doc["ensemble_summary"] = ensemble;
    return doc;
}

EnsembleIntegration archive_from_json(const json& doc) {
    const std::string root;
    as_object(doc, "/");
    const auto version = as_int(require(doc, "format_version", root), "/format_version");
    if (version != kArchiveFormatVersion)
        throw SchemaError("unsupported version: archive format_version " + std::to_string(version) + ", this build reads " +
                          std::to_string(kArchiveFormatVersion));

    CvConfig cv;
    const auto& c = as_object(require(doc, "cv", root), "/cv");
    cv.k_outer = as_size(require(c, "k_outer", "/cv"), "/cv/k_outer");
    cv.k_inner = as_size(require(c, "k_inner", "/cv"), "/cv/k_inner");
    const auto& seed = require(c, "seed", "/cv");
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0))
        throw SchemaError("schema violation: expected an unsigned integer at '/cv/seed'");
    cv.seed = seed.get<std::uint64_t>();
    try {
        cv.mode = parse_cv_mode(as_string(require(c, "mode", "/cv"), "/cv/mode"));
    } catch (const UsageError& e) {
        throw SchemaError(std::string(e.what()) + " at '/cv/mode'");
    }
    if (cv.k_outer < 2 || cv.k_inner < 2) throw SchemaError("schema violation: fold counts must be >= 2 at '/cv'");

    FinalModel fm;
    const auto& mods = as_array(require(doc, "modalities", root), "/modalities");
    if (mods.empty()) throw SchemaError("schema violation: no modalities at '/modalities'");
    for (std::size_t m = 0; m < mods.size(); ++m) {
        const auto mp = at("/modalities", m);
        fm.modality_names.push_back(as_string(require(mods[m], "name", mp), at(mp, "name")));
        const auto fp = at(mp, "feature_names");
        const auto& names = as_array(require(mods[m], "feature_names", mp), fp);
        std::vector<std::string> features;
        for (std::size_t f = 0; f < names.size(); ++f) features.push_back(as_string(names[f], at(fp, f)));
        const auto lp = at(mp, "learners");
        const auto& learners = as_array(require(mods[m], "learners", mp), lp);
        if (learners.empty()) throw SchemaError("schema violation: modality without learners at '" + lp + "'");
        std::vector<FittedBaseModel> models;
        for (std::size_t l = 0; l < learners.size(); ++l) {
            models.push_back(fitted_model_from_json(learners[l], at(lp, l)));
            if (models.back().feature_count != features.size())
                throw SchemaError("schema violation: feature_count differs from feature_names at '" + at(lp, l) + "'");
        }
        fm.feature_names.push_back(std::move(features));
        fm.base_models.push_back(std::move(models));
    }

    const auto& keys = as_array(require(doc, "column_keys", root), "/column_keys");
    for (std::size_t i = 0; i < keys.size(); ++i) {
        const auto kp = at("/column_keys", i);
        fm.column_keys.push_back({as_string(require(keys[i], "modality", kp), at(kp, "modality")),
                                  as_string(require(keys[i], "learner", kp), at(kp, "learner"))});
    }
    std::vector<ColumnKey> expected;
    for (std::size_t m = 0; m < fm.base_models.size(); ++m)
        for (const auto& model : fm.base_models[m]) expected.push_back({fm.modality_names[m], model.spec.name});
    if (expected != fm.column_keys)
        throw SchemaError("schema violation: column_keys do not match modality learners at '/column_keys'");

    const auto& training = as_object(require(doc, "training", root), "/training");
    const auto& ids = as_array(require(training, "sample_ids", "/training"), "/training/sample_ids");
    for (std::size_t i = 0; i < ids.size(); ++i) fm.sample_ids.push_back(as_string(ids[i], at("/training/sample_ids", i)));
    const auto& labels = as_array(require(training, "labels", "/training"), "/training/labels");
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto y = as_int(labels[i], at("/training/labels", i));
        if (y != 0 && y != 1) throw SchemaError("schema violation: label outside {0,1} at '" + at("/training/labels", i) + "'");
        fm.labels.push_back(static_cast<int>(y));
    }
    fm.training.scores = as_matrix(require(training, "scores", "/training"), "/training/scores");
    fm.training.column_keys = fm.column_keys;
    if (fm.labels.size() != fm.sample_ids.size() || static_cast<std::size_t>(fm.training.scores.rows()) != fm.labels.size() ||
        (fm.training.scores.rows() > 0 && static_cast<std::size_t>(fm.training.scores.cols()) != fm.column_keys.size()))
        throw SchemaError("schema violation: inconsistent training matrix shape at '/training'");
    for (std::size_t i = 0; i < fm.labels.size(); ++i) fm.training.rows.push_back(i);

    const auto& ens = as_array(require(doc, "ensembles", root), "/ensembles");
    for (std::size_t i = 0; i < ens.size(); ++i) fm.ensembles.push_back(ensemble_from(ens[i], at("/ensembles", i), fm.column_keys.size()));

    std::optional<SummaryTable> base, ensemble;
    if (auto* b = optional(doc, "base_summary", root)) base = summary_from_json(*b, "/base_summary");
    if (auto* e = optional(doc, "ensemble_summary", root)) ensemble = summary_from_json(*e, "/ensemble_summary");
    return EnsembleIntegration::from_final(cv, std::move(fm), std::move(base), std::move(ensemble));
}

void save_model(const EnsembleIntegration& ei, const std::filesystem::path& path) {
    csv::write_file(path, archive_to_json(ei).dump(1) + "\n");
}

EnsembleIntegration load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model archive: " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError("truncated or malformed model archive " + path.string() + ": " + e.what());
    }
    return archive_from_json(doc);
}

}  // namespace ei
