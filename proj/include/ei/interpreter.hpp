#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "ei/engine.hpp"
#include "ei/metrics.hpp"

namespace ei {

/// Permutation importance of each input column.
struct ImportanceVector {
    std::vector<std::string> keys;
    std::vector<double> raw_drops;  // mean metric drop over repeats
    std::vector<double> weights;    // drops clipped at 0, normalized to sum 1 (all zero if no drop is positive)
};

using ScoreFunction = std::function<Vector(const Matrix&)>;

/// For each column c, the mean over repeats of metric(x) - metric(x with
/// column c shuffled). Repeat r uses the same row permutation for every
/// column, derived from (seed, r), so interchangeable columns receive
/// matched shuffles.
ImportanceVector permutation_importance(const ScoreFunction& score, const Matrix& x, const Labels& y, Metric metric,
                                        std::size_t n_repeats, Seed seed, std::vector<std::string> keys = {});

/// Importance of each base-predictor column to an ensemble, over the final
/// ensemble training matrix. Keys are "modality.learner".
ImportanceVector ensemble_model_importance(const EnsembleIntegration& ei, const std::string& ensemble_id,
                                           Metric metric = Metric::auc, std::size_t n_repeats = 10, Seed seed = 0);

struct RankedFeature {
    std::string modality;
    std::string feature;
    double score = 0.0;
    std::size_t rank = 0;
};

/// Dense ranks, 1 = most important; ties share a rank and are listed by
/// (modality, feature).
using FeatureRanking = std::vector<RankedFeature>;

struct Interpretation {
    ImportanceVector model_importance;
    std::vector<std::vector<ImportanceVector>> local_importance;  // [modality][learner], over features
    FeatureRanking ranking;
};

/// Feature contribution: score(f in modality i) = sum over base predictors b
/// on modality i of MI(b) * LFI(f | b), where MI are the normalized ensemble
/// model importances and LFI the normalized permutation importances of b's
/// final model on the training features (in-sample).
///
/// `training` supplies the features; its rows are matched to the archive's
/// training samples by sample id.
Interpretation interpret_detailed(const EnsembleIntegration& ei, const MultiModalDataset& training,
                                  const std::string& ensemble_id, Metric metric = Metric::auc,
                                  std::size_t n_repeats = 10, Seed seed = 0);

FeatureRanking interpret(const EnsembleIntegration& ei, const MultiModalDataset& training,
                         const std::string& ensemble_id, Metric metric = Metric::auc, std::size_t n_repeats = 10,
                         Seed seed = 0);

/// Uses the dataset the engine was fitted on.
FeatureRanking interpret(const EnsembleIntegration& ei, const std::string& ensemble_id, Metric metric = Metric::auc,
                         std::size_t n_repeats = 10, Seed seed = 0);

/// Ranks (modality, feature, score) triples.
FeatureRanking rank_features(std::vector<RankedFeature> features);

/// CSV: modality,feature,score,rank
std::string ranking_to_csv(const FeatureRanking& ranking);

}  // namespace ei
