#include "ei/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ei/csv.hpp"
#include "ei/error.hpp"

namespace ei {
namespace {

void check_inputs(const Vector& scores, const Labels& labels, const char* what, std::size_t& positives) {
    if (static_cast<std::size_t>(scores.size()) != labels.size())
        throw DataError(std::string(what) + ": scores and labels differ in length");
    positives = 0;
    for (int v : labels) {
        if (v != 0 && v != 1) throw DataError(std::string(what) + ": label outside {0,1}");
        positives += static_cast<std::size_t>(v);
    }
    if (positives == 0 || positives == labels.size()) throw DataError(std::string(what) + ": single-class labels");
    if (!scores.allFinite()) throw DataError(std::string(what) + ": non-finite scores");
}

std::vector<std::size_t> order_by_score(const Vector& scores) {
    std::vector<std::size_t> order(static_cast<std::size_t>(scores.size()));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores(static_cast<Eigen::Index>(a)) < scores(static_cast<Eigen::Index>(b));
    });
    return order;
}

}  // namespace

double roc_auc(const Vector& scores, const Labels& labels) {
    std::size_t positives = 0;
    check_inputs(scores, labels, "roc_auc", positives);
    const std::size_t negatives = labels.size() - positives;
    const auto order = order_by_score(scores);

    // Twice the Mann-Whitney U: every positive scores 2 per negative strictly
    // below it and 1 per tied negative. Kept integral so the result is exact.
    unsigned long long twice_u = 0;
    unsigned long long negatives_below = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        unsigned long long pos = 0, neg = 0;
        const double s = scores(static_cast<Eigen::Index>(order[i]));
        while (j < order.size() && scores(static_cast<Eigen::Index>(order[j])) == s) {
            (labels[order[j]] == 1 ? pos : neg) += 1;
            ++j;
        }
        twice_u += pos * (2 * negatives_below + neg);
        negatives_below += neg;
        i = j;
    }
    return static_cast<double>(twice_u) / (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
}

FmaxResult fmax(const Vector& scores, const Labels& labels) {
    std::size_t positives = 0;
    check_inputs(scores, labels, "fmax", positives);
    const auto order = order_by_score(scores);

    // Sweep thresholds from the smallest distinct score upward; at each one,
    // everything from that score up is predicted positive.
    FmaxResult best{-1.0, 0.0, 0.0, 0.0};
    std::size_t tp = positives;
    std::size_t predicted = labels.size();
    for (std::size_t i = 0; i < order.size();) {
        const double t = scores(static_cast<Eigen::Index>(order[i]));
        const double f1 = predicted == 0 ? 0.0
                                         : 2.0 * static_cast<double>(tp) /
                                               static_cast<double>(predicted + positives);
        if (f1 > best.fmax) {
            best.fmax = f1;
            best.threshold = t;
            best.precision = static_cast<double>(tp) / static_cast<double>(predicted);
            best.recall = static_cast<double>(tp) / static_cast<double>(positives);
        }
        while (i < order.size() && scores(static_cast<Eigen::Index>(order[i])) == t) {
            tp -= static_cast<std::size_t>(labels[order[i]]);
            --predicted;
            ++i;
        }
    }
    return best;
}

Metric parse_metric(std::string_view name) {
    if (name == "auc") return Metric::auc;
    if (name == "fmax") return Metric::fmax;
    throw UsageError("unknown metric '" + std::string(name) + "' (expected auc or fmax)");
}

std::string_view metric_name(Metric m) { return m == Metric::auc ? "auc" : "fmax"; }

double evaluate_metric(Metric m, const Vector& scores, const Labels& labels) {
    return m == Metric::auc ? roc_auc(scores, labels) : fmax(scores, labels).fmax;
}

SummaryTable build_summary(const std::vector<std::pair<std::string, Vector>>& scores, const Labels& labels) {
    SummaryTable table;
    for (const auto& [name, s] : scores) {
        const auto f = fmax(s, labels);
        table.push_back({name, roc_auc(s, labels), f.fmax, f.threshold, f.precision, f.recall, labels.size()});
    }
    std::sort(table.begin(), table.end(), [](const SummaryRow& a, const SummaryRow& b) {
        if (a.auc != b.auc) return a.auc > b.auc;
        return a.name < b.name;
    });
    return table;
}

std::string summary_to_csv(const SummaryTable& table) {
    std::ostringstream out;
    out << "name,auc,fmax,fmax_threshold,precision_at_fmax,recall_at_fmax,n_evaluated\n";
    for (const auto& r : table) {
        out << csv::escape(r.name) << ',' << csv::format_double(r.auc) << ',' << csv::format_double(r.fmax) << ','
            << csv::format_double(r.fmax_threshold) << ',' << csv::format_double(r.precision_at_fmax) << ','
            << csv::format_double(r.recall_at_fmax) << ',' << r.n_evaluated << '\n';
    }
    return out.str();
}

}  // namespace ei
