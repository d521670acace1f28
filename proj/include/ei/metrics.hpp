#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ei/types.hpp"

namespace ei {

/// Probability that a random positive outranks a random negative, ties
/// counting one half. Throws DataError on single-class labels.
double roc_auc(const Vector& scores, const Labels& labels);

struct FmaxResult {
    double fmax = 0.0;
    double threshold = 0.0;
    double precision = 0.0;
    double recall = 0.0;
};

/// Best F1 over thresholds drawn from the distinct scores, predicting
/// positive when score >= threshold. Returns the smallest maximizing
/// threshold.
FmaxResult fmax(const Vector& scores, const Labels& labels);

enum class Metric { auc, fmax };

Metric parse_metric(std::string_view name);
std::string_view metric_name(Metric m);
double evaluate_metric(Metric m, const Vector& scores, const Labels& labels);

struct SummaryRow {
    std::string name;
    double auc = 0.0;
    double fmax = 0.0;
    double fmax_threshold = 0.0;
    double precision_at_fmax = 0.0;
    double recall_at_fmax = 0.0;
    std::size_t n_evaluated = 0;

    friend bool operator==(const SummaryRow&, const SummaryRow&) = default;
};

using SummaryTable = std::vector<SummaryRow>;

/// One row per named score vector, sorted by AUC descending then name.
SummaryTable build_summary(const std::vector<std::pair<std::string, Vector>>& scores, const Labels& labels);

/// CSV with header and LF line endings; floats at full round-trip precision.
std::string summary_to_csv(const SummaryTable& table);

}  // namespace ei
