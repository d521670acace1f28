#include "ei/ensemble.hpp"

#include <algorithm>

#include "ei/error.hpp"

namespace ei {
namespace {

void require_non_empty(const Matrix& t, const char* what) {
    if (t.rows() == 0 || t.cols() == 0) throw DataError(std::string(what) + ": empty score matrix");
}

// Rows of `t` drawn with replacement, redrawn until both classes appear.
std::vector<std::size_t> bootstrap_bag(const Labels& y, Seed seed) {
    const auto n = y.size();
    for (std::uint64_t attempt = 0;; ++attempt) {
        Rng rng(derive_seed(seed, {attempt}));
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        std::vector<std::size_t> rows(n);
        std::size_t pos = 0;
        for (auto& r : rows) {
            r = pick(rng);
            pos += static_cast<std::size_t>(y[r]);
        }
        if (pos > 0 && pos < n) return rows;
    }
}

}  // namespace

EnsembleKind parse_ensemble_kind(std::string_view name) {
    if (name == "mean") return EnsembleKind::mean;
    if (name == "median") return EnsembleKind::median;
    if (name == "stacker") return EnsembleKind::stacker;
    if (name == "greedy") return EnsembleKind::greedy;
    throw UsageError("unknown ensemble kind '" + std::string(name) + "'");
}

std::string_view ensemble_kind_name(EnsembleKind kind) {
    switch (kind) {
        case EnsembleKind::mean: return "mean";
        case EnsembleKind::median: return "median";
        case EnsembleKind::stacker: return "stacker";
        case EnsembleKind::greedy: return "greedy";
    }
    return "?";
}

EnsembleSpec mean_ensemble(std::string id) {
    EnsembleSpec s;
    s.id = std::move(id);
    s.kind = EnsembleKind::mean;
    return s;
}

EnsembleSpec median_ensemble(std::string id) {
    EnsembleSpec s;
    s.id = std::move(id);
    s.kind = EnsembleKind::median;
    return s;
}

EnsembleSpec stacker_ensemble(LearnerSpec meta, std::string id) {
    EnsembleSpec s;
    s.id = id.empty() ? "stacker_" + meta.name : std::move(id);
    s.kind = EnsembleKind::stacker;
    s.meta = std::move(meta);
    return s;
}

EnsembleSpec greedy_ensemble(Metric metric, std::string id) {
    EnsembleSpec s;
    s.id = id.empty() ? "greedy_" + std::string(metric_name(metric)) : std::move(id);
    s.kind = EnsembleKind::greedy;
    s.metric = metric;
    return s;
}

std::vector<EnsembleSpec> default_ensembles() {
    return {mean_ensemble(), median_ensemble(), stacker_ensemble(make_learner("logistic")),
            greedy_ensemble(Metric::auc)};
}

Vector aggregate_mean(const Matrix& t) {
    require_non_empty(t, "aggregate_mean");
    return t.rowwise().sum() / static_cast<double>(t.cols());
}

Vector aggregate_median(const Matrix& t) {
    require_non_empty(t, "aggregate_median");
    Vector out(t.rows());
    std::vector<double> row(static_cast<std::size_t>(t.cols()));
    const auto c = row.size();
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
        for (std::size_t j = 0; j < c; ++j) row[j] = t(r, static_cast<Eigen::Index>(j));
        std::sort(row.begin(), row.end());
        out(r) = c % 2 == 1 ? row[c / 2] : row[c / 2 - 1] + (row[c / 2] - row[c / 2 - 1]) / 2.0;
    }
    return out;
}

EnsembleModel train_stacker(const Matrix& t, const Labels& y, const LearnerSpec& meta, Seed seed) {
    require_non_empty(t, "train_stacker");
    EnsembleModel m;
    m.spec = stacker_ensemble(meta);
    m.column_count = static_cast<std::size_t>(t.cols());
    m.stacker = fit_learner(meta, t, y, seed);
    return m;
}

EnsembleModel train_greedy(const Matrix& t, const Labels& y, Metric metric, std::size_t bags, std::size_t max_iter,
                           Seed seed) {
    require_non_empty(t, "train_greedy");
    if (static_cast<std::size_t>(t.rows()) != y.size()) throw DataError("train_greedy: rows and labels differ");
    if (bags < 1) throw UsageError("train_greedy: bags must be >= 1");
    const auto cols = static_cast<std::size_t>(t.cols());
    const std::size_t limit = max_iter == 0 ? cols : max_iter;

    std::vector<std::vector<std::size_t>> bag_rows;
    std::vector<Labels> bag_labels;
    std::vector<Matrix> bag_scores;
    for (std::size_t b = 0; b < bags; ++b) {
        bag_rows.push_back(bootstrap_bag(y, derive_seed(seed, {b})));
        bag_labels.push_back(take(y, bag_rows.back()));
        bag_scores.push_back(take_rows(t, bag_rows.back()));
    }

    EnsembleModel m;
    m.spec = greedy_ensemble(metric);
    m.spec.bags = bags;
    m.spec.max_iter = max_iter;
    m.column_count = cols;

    std::vector<Vector> running_sum(bags);
    for (std::size_t b = 0; b < bags; ++b) running_sum[b] = Vector::Zero(static_cast<Eigen::Index>(bag_rows[b].size()));
    double current = 0.0;

    while (m.selection.size() < limit) {
        const double count = static_cast<double>(m.selection.size() + 1);
        double best_value = 0.0;
        std::size_t best_col = cols;
        for (std::size_t c = 0; c < cols; ++c) {
            double total = 0.0;
            for (std::size_t b = 0; b < bags; ++b) {
                const Vector candidate = (running_sum[b] + bag_scores[b].col(static_cast<Eigen::Index>(c))) / count;
                total += evaluate_metric(metric, candidate, bag_labels[b]);
            }
            const double value = total / static_cast<double>(bags);
            if (best_col == cols || value > best_value) {
                best_value = value;
                best_col = c;
            }
        }
        if (!m.selection.empty() && !(best_value > current)) break;
        m.selection.push_back(best_col);
        m.trace.push_back(best_value);
        current = best_value;
        for (std::size_t b = 0; b < bags; ++b) running_sum[b] += bag_scores[b].col(static_cast<Eigen::Index>(best_col));
    }
    return m;
}

EnsembleModel train_ensemble(const EnsembleSpec& spec, const Matrix& t, const Labels& y, Seed seed) {
    if (static_cast<std::size_t>(t.rows()) != y.size())
        throw DataError("ensemble '" + spec.id + "': rows and labels differ");
    EnsembleModel m;
    switch (spec.kind) {
        case EnsembleKind::mean:
        case EnsembleKind::median:
            require_non_empty(t, "ensemble");
            m.column_count = static_cast<std::size_t>(t.cols());
            break;
        case EnsembleKind::stacker:
            m = train_stacker(t, y, spec.meta, seed);
            break;
        case EnsembleKind::greedy:
            m = train_greedy(t, y, spec.metric, spec.bags, spec.max_iter, seed);
            break;
    }
    m.spec = spec;
    return m;
}

Vector apply_ensemble(const EnsembleModel& model, const Matrix& s) {
    if (static_cast<std::size_t>(s.cols()) != model.column_count)
        throw DataError("ensemble '" + model.spec.id + "': expected " + std::to_string(model.column_count) +
                        " columns, got " + std::to_string(s.cols()));
    switch (model.spec.kind) {
        case EnsembleKind::mean: return aggregate_mean(s);
        case EnsembleKind::median: return aggregate_median(s);
        case EnsembleKind::stacker:
            if (!model.stacker) throw DataError("ensemble '" + model.spec.id + "': stacker model missing");
            return predict_proba(*model.stacker, s);
        case EnsembleKind::greedy: {
            if (model.selection.empty()) throw DataError("ensemble '" + model.spec.id + "': empty selection");
            Vector sum = Vector::Zero(s.rows());
            for (auto c : model.selection) {
                if (c >= model.column_count) throw DataError("ensemble '" + model.spec.id + "': selection out of range");
                sum += s.col(static_cast<Eigen::Index>(c));
            }
            return sum / static_cast<double>(model.selection.size());
        }
    }
    throw DataError("unknown ensemble kind");
}

}  // namespace ei
