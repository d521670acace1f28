#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ei/learners.hpp"
#include "ei/metrics.hpp"
#include "ei/types.hpp"

namespace ei {

enum class EnsembleKind { mean, median, stacker, greedy };

EnsembleKind parse_ensemble_kind(std::string_view name);
std::string_view ensemble_kind_name(EnsembleKind kind);

struct EnsembleSpec {
    std::string id;
    EnsembleKind kind = EnsembleKind::mean;
    LearnerSpec meta = make_learner("logistic");  // stacker only
    Metric metric = Metric::auc;  // greedy only
    std::size_t bags = 10;  // greedy only
    std::size_t max_iter = 0;  // greedy only; 0 means one per column
};

EnsembleSpec mean_ensemble(std::string id = "mean");
EnsembleSpec median_ensemble(std::string id = "median");
EnsembleSpec stacker_ensemble(LearnerSpec meta, std::string id = {});
EnsembleSpec greedy_ensemble(Metric metric = Metric::auc, std::string id = {});

/// mean, median, stacker(logistic) and greedy(auc).
std::vector<EnsembleSpec> default_ensembles();

struct EnsembleModel {
    EnsembleSpec spec;
    std::size_t column_count = 0;
    std::optional<FittedBaseModel> stacker;
    std::vector<std::size_t> selection;  // greedy: selected columns with multiplicity
    std::vector<double> trace;  // greedy: bagged metric after each accepted step
};

Vector aggregate_mean(const Matrix& t);
/// Even column counts take the midpoint of the two central values.
Vector aggregate_median(const Matrix& t);

EnsembleModel train_stacker(const Matrix& t, const Labels& y, const LearnerSpec& meta, Seed seed);

/// Forward stepwise selection with replacement over bootstrap bags of rows.
/// Each step adds the column whose inclusion maximizes the mean of `metric`
/// over the bags for the running average; stops after max_iter steps or when
/// no candidate improves on the current value. Ties go to the lowest column.
EnsembleModel train_greedy(const Matrix& t, const Labels& y, Metric metric, std::size_t bags, std::size_t max_iter,
                           Seed seed);

/// Dispatches on spec.kind.
EnsembleModel train_ensemble(const EnsembleSpec& spec, const Matrix& t, const Labels& y, Seed seed);

Vector apply_ensemble(const EnsembleModel& model, const Matrix& s);

}  // namespace ei
