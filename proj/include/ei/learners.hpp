#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ei/types.hpp"

namespace ei {

// Hyperparameters, one record per algorithm. Defaults are the roster
// defaults.

struct LogisticParams {
    double learning_rate = 0.1;
    int iterations = 500;
    double l2 = 1e-4;
};

struct TreeParams {
    int max_depth = 5;
    int min_leaf = 2;
};

struct ForestParams {
    int n_trees = 25;
    int max_depth = 5;
    int min_leaf = 2;
    int max_features = 0;  // 0 means floor(sqrt(f))
};

struct KnnParams {
    int k = 5;
};

struct GnbParams {
    double var_floor = 1e-9;
};

/// Emits a fixed score regardless of input.
struct ConstantParams {
    double value = 0.5;
};

/// Diagnostic: scores 1 for rows seen at fit time, 0 otherwise. Used to
/// prove that cross-validation never scores a sample with a model that was
/// trained on it.
struct LeakProbeParams {};

using LearnerParams =
    std::variant<LogisticParams, TreeParams, ForestParams, KnnParams, GnbParams, ConstantParams, LeakProbeParams>;

struct LearnerSpec {
    std::string name;
    LearnerParams params;
};

/// "logistic", "tree", "forest", "knn", "gnb", "constant", "leak_probe".
std::string_view algorithm_name(const LearnerParams& params);

/// Default-parameter spec for an algorithm name; throws UsageError if unknown.
LearnerSpec make_learner(std::string_view algorithm, std::string name = {});

/// Throws UsageError when hyperparameters are out of range.
void check_params(const LearnerSpec& spec);

/// The five-algorithm roster with default parameters, named by algorithm.
std::vector<LearnerSpec> default_roster();

// Learned state, one record per algorithm.

struct Standardizer {
    Vector mean;
    Vector scale;

    static Standardizer fit(const Matrix& x);
    Matrix apply(const Matrix& x) const;
};

struct LogisticState {
    Standardizer standardizer;
    Vector weights;
    double bias = 0.0;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;  // rows with x[feature] <= threshold go left
    int left = -1;
    int right = -1;
    double value = 0.0;  // positive-class fraction of the training rows reaching the node
};

struct TreeState {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double score(const double* row, Eigen::Index stride) const;
};

struct ForestState {
    std::vector<TreeState> trees;
};

struct KnnState {
    Standardizer standardizer;
    Matrix points;  // standardized training rows
    Labels labels;
    int k = 5;
};

struct GnbState {
    Vector mean[2];
    Vector variance[2];
    double prior_positive = 0.5;
};

struct ConstantState {
    double value = 0.5;
};

struct LeakProbeState {
    Matrix seen;
};

using LearnedState =
    std::variant<LogisticState, TreeState, ForestState, KnnState, GnbState, ConstantState, LeakProbeState>;

struct FittedBaseModel {
    LearnerSpec spec;
    std::size_t feature_count = 0;
    LearnedState state;
};

/// Trains a learner. Deterministic in (spec, x, y, seed).
/// Throws DataError on single-class y, non-finite x or shape mismatch and
/// TrainingError when optimization diverges.
FittedBaseModel fit_learner(const LearnerSpec& spec, const Matrix& x, const Labels& y, Seed seed);

/// Positive-class scores in [0, 1], one per row of x.
Vector predict_proba(const FittedBaseModel& model, const Matrix& x);

struct LossGradient {
    Vector weights;
    double bias = 0.0;
    double loss = 0.0;
};

/// Mean negative log-likelihood of a logistic model plus (l2 / 2) * |w|^2,
/// with its exact gradient.
LossGradient logistic_loss_gradient(const Vector& weights, double bias, const Matrix& x, const Labels& y, double l2);

/// Numerically stable logistic function.
double sigmoid(double z) noexcept;

}  // namespace ei
