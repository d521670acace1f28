#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the code paths it checks.

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "ei/learners.hpp"
#include "ei/types.hpp"

namespace ei::oracle {

/// Pairwise AUC by counting every positive/negative pair.
inline double brute_force_auc(const Vector& s, const Labels& y) {
    unsigned long long twice = 0, pairs = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] != 1) continue;
        for (std::size_t j = 0; j < y.size(); ++j) {
            if (y[j] != 0) continue;
            ++pairs;
            const double a = s(static_cast<Eigen::Index>(i)), b = s(static_cast<Eigen::Index>(j));
            if (a > b) twice += 2;
            else if (a == b) twice += 1;
        }
    }
    return static_cast<double>(twice) / (2.0 * static_cast<double>(pairs));
}

struct SweepResult {
    double fmax = -1.0;
    double threshold = 0.0;
};

/// Tries every distinct score as a threshold in ascending order, counting
/// TP/FP/FN from scratch each time.
inline SweepResult exhaustive_fmax(const Vector& s, const Labels& y) {
    std::set<double> thresholds(s.data(), s.data() + s.size());
    SweepResult best;
    for (double t : thresholds) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const bool predicted = s(static_cast<Eigen::Index>(i)) >= t;
            if (predicted && y[i] == 1) ++tp;
            else if (predicted) ++fp;
            else if (y[i] == 1) ++fn;
        }
        const double f1 = (tp + fp) == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
        if (f1 > best.fmax) best = {f1, t};
    }
    return best;
}

/// Logistic objective evaluated directly from its definition.
inline double logistic_objective(const Vector& w, double b, const Matrix& x, const Labels& y, double l2) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double z = b;
        for (Eigen::Index j = 0; j < x.cols(); ++j) z += w(j) * x(i, j);
        const double p = 1.0 / (1.0 + std::exp(-z));
        total += y[static_cast<std::size_t>(i)] == 1 ? -std::log(p) : -std::log(1.0 - p);
    }
    return total / static_cast<double>(x.rows()) + 0.5 * l2 * w.squaredNorm();
}

/// Central finite-difference gradient: weights then bias.
inline Vector finite_difference_gradient(const Vector& w, double b, const Matrix& x, const Labels& y, double l2,
                                         double h = 1e-5) {
    Vector g(w.size() + 1);
    for (Eigen::Index j = 0; j < w.size(); ++j) {
        Vector up = w, down = w;
        up(j) += h;
        down(j) -= h;
        g(j) = (logistic_objective(up, b, x, y, l2) - logistic_objective(down, b, x, y, l2)) / (2.0 * h);
    }
    g(w.size()) = (logistic_objective(w, b + h, x, y, l2) - logistic_objective(w, b - h, x, y, l2)) / (2.0 * h);
    return g;
}

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor)
inline double max_relative_error(const Vector& a, const Vector& b, double floor = 1e-8) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        const double denom = std::max({std::abs(a(i)), std::abs(b(i)), floor});
        worst = std::max(worst, std::abs(a(i) - b(i)) / denom);
    }
    return worst;
}

}  // namespace ei::oracle
