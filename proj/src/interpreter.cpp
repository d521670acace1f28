#include "ei/interpreter.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "ei/csv.hpp"
#include "ei/error.hpp"

namespace ei {
namespace {

constexpr std::uint64_t kModelImportance = 1;
constexpr std::uint64_t kLocalImportance = 2;

void normalize(ImportanceVector& iv) {
    iv.weights.assign(iv.raw_drops.size(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < iv.raw_drops.size(); ++i) {
        iv.weights[i] = std::max(iv.raw_drops[i], 0.0);
        total += iv.weights[i];
    }
    if (total > 0.0)
        for (auto& w : iv.weights) w /= total;
}

// Rows of `training` reordered to follow `ids`.
std::vector<std::size_t> align_rows(const MultiModalDataset& training, const std::vector<std::string>& ids) {
    std::unordered_map<std::string, std::size_t> row_of;
    for (std::size_t r = 0; r < training.sample_ids.size(); ++r) row_of.emplace(training.sample_ids[r], r);
    std::vector<std::size_t> rows;
    rows.reserve(ids.size());
    for (const auto& id : ids) {
        auto it = row_of.find(id);
        if (it == row_of.end()) throw DataError("interpret: training data lacks sample '" + id + "'");
        rows.push_back(it->second);
    }
    return rows;
}

}  // namespace

ImportanceVector permutation_importance(const ScoreFunction& score, const Matrix& x, const Labels& y, Metric metric,
                                        std::size_t n_repeats, Seed seed, std::vector<std::string> keys) {
    if (n_repeats < 1) throw UsageError("permutation_importance: n_repeats must be >= 1");
    if (static_cast<std::size_t>(x.rows()) != y.size()) throw DataError("permutation_importance: rows and labels differ");
    if (keys.empty())
        for (Eigen::Index c = 0; c < x.cols(); ++c) keys.push_back(std::to_string(c));
    if (keys.size() != static_cast<std::size_t>(x.cols())) throw DataError("permutation_importance: key count differs from columns");

    const double baseline = evaluate_metric(metric, score(x), y);
    std::vector<std::vector<std::size_t>> perms(n_repeats);
    for (std::size_t r = 0; r < n_repeats; ++r) {
        perms[r].resize(y.size());
        std::iota(perms[r].begin(), perms[r].end(), 0);
        Rng rng(derive_seed(seed, {r}));
        std::shuffle(perms[r].begin(), perms[r].end(), rng);
    }

    ImportanceVector iv;
    iv.keys = std::move(keys);
    iv.raw_drops.assign(iv.keys.size(), 0.0);
    Matrix shuffled = x;
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        double total = 0.0;
        for (std::size_t r = 0; r < n_repeats; ++r) {
            for (Eigen::Index j = 0; j < x.rows(); ++j)
                shuffled(j, c) = x(static_cast<Eigen::Index>(perms[r][static_cast<std::size_t>(j)]), c);
            total += baseline - evaluate_metric(metric, score(shuffled), y);
        }
        shuffled.col(c) = x.col(c);
        iv.raw_drops[static_cast<std::size_t>(c)] = total / static_cast<double>(n_repeats);
    }
    normalize(iv);
    return iv;
}

ImportanceVector ensemble_model_importance(const EnsembleIntegration& ei, const std::string& ensemble_id, Metric metric,
                                           std::size_t n_repeats, Seed seed) {
    const auto& fm = ei.final_model();
    const auto& ens = fm.ensemble(ensemble_id);
    std::vector<std::string> keys;
    for (const auto& k : fm.column_keys) keys.push_back(k.label());
    return permutation_importance([&](const Matrix& t) { return apply_ensemble(ens, t); }, fm.training.scores,
                                  fm.labels, metric, n_repeats, derive_seed(seed, {kModelImportance}), std::move(keys));
}

Interpretation interpret_detailed(const EnsembleIntegration& ei, const MultiModalDataset& training,
                                  const std::string& ensemble_id, Metric metric, std::size_t n_repeats, Seed seed) {
    const auto& fm = ei.final_model();
    fm.ensemble(ensemble_id);

    Interpretation out;
    out.model_importance = ensemble_model_importance(ei, ensemble_id, metric, n_repeats, seed);

    const auto rows = align_rows(training, fm.sample_ids);
    std::vector<RankedFeature> features;
    std::size_t column = 0;
    for (std::size_t m = 0; m < fm.modality_names.size(); ++m) {
        const auto idx = training.find_modality(fm.modality_names[m]);
        if (idx == MultiModalDataset::npos)
            throw DataError("interpret: training data lacks modality '" + fm.modality_names[m] + "'");
        const auto& mod = training.modalities[idx];
        if (mod.feature_names != fm.feature_names[m])
            throw DataError("interpret: feature names of modality '" + mod.name + "' differ from the model's");
        const Matrix x = take_rows(mod.features, rows);

        std::vector<double> scores(fm.feature_names[m].size(), 0.0);
        out.local_importance.emplace_back();
        for (std::size_t l = 0; l < fm.base_models[m].size(); ++l, ++column) {
            const auto& model = fm.base_models[m][l];
            auto lfi = permutation_importance([&](const Matrix& q) { return predict_proba(model, q); }, x, fm.labels,
                                              metric, n_repeats, derive_seed(seed, {kLocalImportance, m, l}),
                                              fm.feature_names[m]);
            const double mi = out.model_importance.weights[column];
            for (std::size_t f = 0; f < scores.size(); ++f) scores[f] += mi * lfi.weights[f];
            out.local_importance.back().push_back(std::move(lfi));
        }
        for (std::size_t f = 0; f < scores.size(); ++f)
            features.push_back({fm.modality_names[m], fm.feature_names[m][f], scores[f], 0});
    }
    out.ranking = rank_features(std::move(features));
    return out;
}

FeatureRanking interpret(const EnsembleIntegration& ei, const MultiModalDataset& training,
                         const std::string& ensemble_id, Metric metric, std::size_t n_repeats, Seed seed) {
    return interpret_detailed(ei, training, ensemble_id, metric, n_repeats, seed).ranking;
}

FeatureRanking interpret(const EnsembleIntegration& ei, const std::string& ensemble_id, Metric metric,
                         std::size_t n_repeats, Seed seed) {
    if (!ei.dataset()) throw UsageError("interpret: engine holds no training data; pass it explicitly");
    return interpret(ei, *ei.dataset(), ensemble_id, metric, n_repeats, seed);
}

FeatureRanking rank_features(std::vector<RankedFeature> features) {
    std::sort(features.begin(), features.end(), [](const RankedFeature& a, const RankedFeature& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.modality != b.modality) return a.modality < b.modality;
        return a.feature < b.feature;
    });
    std::size_t rank = 0;
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (i == 0 || features[i].score != features[i - 1].score) ++rank;
        features[i].rank = rank;
    }
    return features;
}

std::string ranking_to_csv(const FeatureRanking& ranking) {
    std::ostringstream out;
    out << "modality,feature,score,rank\n";
    for (const auto& r : ranking)
        out << csv::escape(r.modality) << ',' << csv::escape(r.feature) << ',' << csv::format_double(r.score) << ','
            << r.rank << '\n';
    return out.str();
}

}  // namespace ei
