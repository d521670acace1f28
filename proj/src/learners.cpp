#include "ei/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "ei/error.hpp"

namespace ei {
namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double softplus(double z) noexcept { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

// ---- logistic -------------------------------------------------------------

LogisticState fit_logistic(const LogisticParams& p, const Matrix& x, const Labels& y, const std::string& name) {
    LogisticState st;
    st.standardizer = Standardizer::fit(x);
    const Matrix z = st.standardizer.apply(x);
    st.weights = Vector::Zero(x.cols());
    st.bias = 0.0;
    for (int it = 0; it < p.iterations; ++it) {
        const auto g = logistic_loss_gradient(st.weights, st.bias, z, y, p.l2);
        if (!std::isfinite(g.loss))
            throw TrainingError("training failure in learner '" + name + "': loss became non-finite at iteration " +
                                std::to_string(it));
        st.weights -= p.learning_rate * g.weights;
        st.bias -= p.learning_rate * g.bias;
    }
    if (!st.weights.allFinite() || !std::isfinite(st.bias))
        throw TrainingError("training failure in learner '" + name + "': parameters became non-finite");
    return st;
}

Vector score_logistic(const LogisticState& st, const Matrix& x) {
    const Vector margin = (st.standardizer.apply(x) * st.weights).array() + st.bias;
    return margin.unaryExpr([](double m) { return sigmoid(m); });
}

// ---- CART -----------------------------------------------------------------

struct TreeBuilder {
    const Matrix& x;
    const Labels& y;
    int max_depth;
    int min_leaf;
    int max_features;  // <= 0: all features
    Rng* rng;
    TreeState tree;

    // Candidate features for one split, ascending.
    std::vector<int> candidates() {
        const int f = static_cast<int>(x.cols());
        std::vector<int> all(static_cast<std::size_t>(f));
        std::iota(all.begin(), all.end(), 0);
        if (max_features <= 0 || max_features >= f || rng == nullptr) return all;
        for (int i = 0; i < max_features; ++i) {
            std::uniform_int_distribution<int> pick(i, f - 1);
            std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(pick(*rng))]);
        }
        all.resize(static_cast<std::size_t>(max_features));
        std::sort(all.begin(), all.end());
        return all;
    }

    int build(std::vector<std::size_t>& rows, int depth) {
        const auto n = rows.size();
        std::size_t pos = 0;
        for (auto r : rows) pos += static_cast<std::size_t>(y[r]);
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({-1, 0.0, -1, -1, static_cast<double>(pos) / static_cast<double>(n)});

        const auto leaf_min = static_cast<std::size_t>(std::max(min_leaf, 1));
        if (depth >= max_depth || n < 2 * leaf_min || pos == 0 || pos == n) return id;

        // Maximizing sum over children of (p^2 + q^2) / size is the same as
        // minimizing the size-weighted Gini impurity.
        auto purity = [](double p, double q) { return (p * p + q * q) / (p + q); };
        const double parent = purity(static_cast<double>(pos), static_cast<double>(n - pos));
        double best = parent + 1e-12 * static_cast<double>(n);
        int best_feature = -1;
        double best_threshold = 0.0;

        std::vector<std::size_t> sorted = rows;
        for (int f : candidates()) {
            std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) { return x(a, f) < x(b, f); });
            std::size_t left_pos = 0;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                left_pos += static_cast<std::size_t>(y[sorted[i]]);
                const double lo = x(sorted[i], f);
                const double hi = x(sorted[i + 1], f);
                const std::size_t nl = i + 1;
                if (lo == hi || nl < leaf_min || n - nl < leaf_min) continue;
                const double l1 = static_cast<double>(left_pos);
                const double l0 = static_cast<double>(nl - left_pos);
                const double r1 = static_cast<double>(pos - left_pos);
                const double r0 = static_cast<double>(n - nl - (pos - left_pos));
                const double value = purity(l1, l0) + purity(r1, r0);
                if (value > best) {
                    best = value;
                    best_feature = f;
                    double mid = lo + (hi - lo) / 2.0;
                    if (!(mid < hi)) mid = lo;
                    best_threshold = mid;
                }
            }
        }
        if (best_feature < 0) return id;

        std::vector<std::size_t> left, right;
        for (auto r : rows) (x(r, best_feature) <= best_threshold ? left : right).push_back(r);
        rows.clear();
        rows.shrink_to_fit();
        const int l = build(left, depth + 1);
        const int r = build(right, depth + 1);
        auto& node = tree.nodes[static_cast<std::size_t>(id)];
        node.feature = best_feature;
        node.threshold = best_threshold;
        node.left = l;
        node.right = r;
        return id;
    }
};

TreeState fit_tree(const Matrix& x, const Labels& y, std::vector<std::size_t> rows, int max_depth, int min_leaf,
                   int max_features, Rng* rng) {
    TreeBuilder b{x, y, max_depth, min_leaf, max_features, rng, {}};
    b.build(rows, 0);
    return std::move(b.tree);
}

Vector score_tree(const TreeState& t, const Matrix& x) {
    Vector out(x.rows());
    for (Eigen::Index r = 0; r < x.rows(); ++r) out(r) = t.score(x.data() + r, x.rows());
    return out;
}

ForestState fit_forest(const ForestParams& p, const Matrix& x, const Labels& y, Seed seed) {
    ForestState st;
    const auto n = static_cast<std::size_t>(x.rows());
    const int max_features =
        p.max_features > 0 ? p.max_features : std::max(1, static_cast<int>(std::sqrt(static_cast<double>(x.cols()))));
    for (int t = 0; t < p.n_trees; ++t) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(t)}));
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        std::vector<std::size_t> rows(n);
        for (auto& r : rows) r = pick(rng);
        st.trees.push_back(fit_tree(x, y, std::move(rows), p.max_depth, p.min_leaf, max_features, &rng));
    }
    return st;
}

Vector score_forest(const ForestState& st, const Matrix& x) {
    Vector out = Vector::Zero(x.rows());
    for (const auto& t : st.trees) out += score_tree(t, x);
    return out / static_cast<double>(st.trees.size());
}

// ---- k-NN -----------------------------------------------------------------

KnnState fit_knn(const KnnParams& p, const Matrix& x, const Labels& y) {
    KnnState st;
    st.standardizer = Standardizer::fit(x);
    st.points = st.standardizer.apply(x);
    st.labels = y;
    st.k = p.k;
    return st;
}

Vector score_knn(const KnnState& st, const Matrix& x) {
    const Matrix q = st.standardizer.apply(x);
    const auto n = static_cast<std::size_t>(st.points.rows());
    const auto k = std::min(static_cast<std::size_t>(st.k), n);
    Vector out(q.rows());
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (Eigen::Index r = 0; r < q.rows(); ++r) {
        for (std::size_t i = 0; i < n; ++i)
            dist[i] = {(st.points.row(static_cast<Eigen::Index>(i)) - q.row(r)).squaredNorm(), i};
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
        std::size_t pos = 0;
        for (std::size_t i = 0; i < k; ++i) pos += static_cast<std::size_t>(st.labels[dist[i].second]);
        out(r) = static_cast<double>(pos) / static_cast<double>(k);
    }
    return out;
}

// ---- Gaussian naive Bayes -------------------------------------------------

GnbState fit_gnb(const GnbParams& p, const Matrix& x, const Labels& y) {
    GnbState st;
    const auto f = x.cols();
    double count[2] = {0.0, 0.0};
    for (int c = 0; c < 2; ++c) {
        st.mean[c] = Vector::Zero(f);
        st.variance[c] = Vector::Zero(f);
    }
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const int c = y[static_cast<std::size_t>(r)];
        st.mean[c] += x.row(r).transpose();
        count[c] += 1.0;
    }
    for (int c = 0; c < 2; ++c) st.mean[c] /= count[c];
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const int c = y[static_cast<std::size_t>(r)];
        st.variance[c] += (x.row(r).transpose() - st.mean[c]).array().square().matrix();
    }
    for (int c = 0; c < 2; ++c) st.variance[c] = (st.variance[c] / count[c]).cwiseMax(p.var_floor);
    st.prior_positive = count[1] / (count[0] + count[1]);
    return st;
}

Vector score_gnb(const GnbState& st, const Matrix& x) {
    constexpr double log_2pi = 1.8378770664093453;
    Vector out(x.rows());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        double ll[2];
        for (int c = 0; c < 2; ++c) {
            const auto d = (x.row(r).transpose() - st.mean[c]).array();
            ll[c] = -0.5 * (d.square() / st.variance[c].array() + st.variance[c].array().log() + log_2pi).sum();
        }
        const double log_odds = std::log(st.prior_positive) - std::log1p(-st.prior_positive) + ll[1] - ll[0];
        out(r) = sigmoid(log_odds);
    }
    return out;
}

// ---- leak probe -----------------------------------------------------------

Vector score_probe(const LeakProbeState& st, const Matrix& x) {
    std::set<std::vector<double>> seen;
    for (Eigen::Index r = 0; r < st.seen.rows(); ++r) {
        std::vector<double> row(static_cast<std::size_t>(st.seen.cols()));
        for (Eigen::Index c = 0; c < st.seen.cols(); ++c) row[static_cast<std::size_t>(c)] = st.seen(r, c);
        seen.insert(std::move(row));
    }
    Vector out(x.rows());
    std::vector<double> row(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        for (Eigen::Index c = 0; c < x.cols(); ++c) row[static_cast<std::size_t>(c)] = x(r, c);
        out(r) = seen.count(row) ? 1.0 : 0.0;
    }
    return out;
}

}  // namespace

double sigmoid(double z) noexcept {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double TreeState::score(const double* row, Eigen::Index stride) const {
    std::size_t i = 0;
    while (nodes[i].feature >= 0) {
        const auto& n = nodes[i];
        i = static_cast<std::size_t>(row[n.feature * stride] <= n.threshold ? n.left : n.right);
    }
    return nodes[i].value;
}

Standardizer Standardizer::fit(const Matrix& x) {
    Standardizer s;
    const double n = static_cast<double>(x.rows());
    s.mean = x.colwise().sum().transpose() / n;
    s.scale.resize(x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        const double var = (x.col(c).array() - s.mean(c)).square().sum() / n;
        const double sd = std::sqrt(var);
        s.scale(c) = sd > 1e-12 ? sd : 1.0;
    }
    return s;
}

Matrix Standardizer::apply(const Matrix& x) const {
    return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

std::string_view algorithm_name(const LearnerParams& params) {
    return std::visit(overloaded{
                          [](const LogisticParams&) { return std::string_view("logistic"); },
                          [](const TreeParams&) { return std::string_view("tree"); },
                          [](const ForestParams&) { return std::string_view("forest"); },
                          [](const KnnParams&) { return std::string_view("knn"); },
                          [](const GnbParams&) { return std::string_view("gnb"); },
                          [](const ConstantParams&) { return std::string_view("constant"); },
                          [](const LeakProbeParams&) { return std::string_view("leak_probe"); },
                      },
                      params);
}

LearnerSpec make_learner(std::string_view algorithm, std::string name) {
    LearnerSpec spec;
    if (algorithm == "logistic") spec.params = LogisticParams{};
    else if (algorithm == "tree") spec.params = TreeParams{};
    else if (algorithm == "forest") spec.params = ForestParams{};
    else if (algorithm == "knn") spec.params = KnnParams{};
    else if (algorithm == "gnb") spec.params = GnbParams{};
    else if (algorithm == "constant") spec.params = ConstantParams{};
    else if (algorithm == "leak_probe") spec.params = LeakProbeParams{};
    else throw UsageError("unknown learner algorithm '" + std::string(algorithm) + "'");
    spec.name = name.empty() ? std::string(algorithm) : std::move(name);
    return spec;
}

std::vector<LearnerSpec> default_roster() {
    return {make_learner("logistic"), make_learner("tree"), make_learner("forest"), make_learner("knn"),
            make_learner("gnb")};
}

void check_params(const LearnerSpec& spec) {
    auto bad = [&](const std::string& what) {
        throw UsageError("learner '" + spec.name + "': " + what);
    };
    if (spec.name.empty()) bad("name must be non-empty");
    std::visit(overloaded{
                   [&](const LogisticParams& p) {
                       if (!(p.learning_rate > 0.0) || !std::isfinite(p.learning_rate)) bad("learning_rate must be > 0");
                       if (p.iterations < 1) bad("iterations must be >= 1");
                       if (!(p.l2 >= 0.0) || !std::isfinite(p.l2)) bad("l2 must be >= 0");
                   },
                   [&](const TreeParams& p) {
                       if (p.max_depth < 0) bad("max_depth must be >= 0");
                       if (p.min_leaf < 1) bad("min_leaf must be >= 1");
                   },
                   [&](const ForestParams& p) {
                       if (p.n_trees < 1) bad("n_trees must be >= 1");
                       if (p.max_depth < 0) bad("max_depth must be >= 0");
                       if (p.min_leaf < 1) bad("min_leaf must be >= 1");
                       if (p.max_features < 0) bad("max_features must be >= 0");
                   },
                   [&](const KnnParams& p) {
                       if (p.k < 1) bad("k must be >= 1");
                   },
                   [&](const GnbParams& p) {
                       if (!(p.var_floor > 0.0)) bad("var_floor must be > 0");
                   },
                   [&](const ConstantParams& p) {
                       if (!(p.value >= 0.0 && p.value <= 1.0)) bad("value must lie in [0, 1]");
                   },
                   [](const LeakProbeParams&) {},
               },
               spec.params);
}

FittedBaseModel fit_learner(const LearnerSpec& spec, const Matrix& x, const Labels& y, Seed seed) {
    check_params(spec);
    if (static_cast<std::size_t>(x.rows()) != y.size())
        throw DataError("learner '" + spec.name + "': " + std::to_string(x.rows()) + " rows but " +
                        std::to_string(y.size()) + " labels");
    if (x.rows() < 2) throw DataError("learner '" + spec.name + "': at least two training rows required");
    if (x.cols() < 1) throw DataError("learner '" + spec.name + "': at least one feature required");
    if (!x.allFinite()) throw DataError("learner '" + spec.name + "': training matrix has non-finite values");
    std::size_t pos = 0;
    for (int v : y) {
        if (v != 0 && v != 1) throw DataError("learner '" + spec.name + "': label outside {0,1}");
        pos += static_cast<std::size_t>(v);
    }
    if (pos == 0 || pos == y.size()) throw DataError("learner '" + spec.name + "': single-class labels");

    FittedBaseModel model;
    model.spec = spec;
    model.feature_count = static_cast<std::size_t>(x.cols());
    model.state = std::visit(
        overloaded{
            [&](const LogisticParams& p) -> LearnedState { return fit_logistic(p, x, y, spec.name); },
            [&](const TreeParams& p) -> LearnedState {
                std::vector<std::size_t> rows(y.size());
                std::iota(rows.begin(), rows.end(), 0);
                return fit_tree(x, y, std::move(rows), p.max_depth, p.min_leaf, 0, nullptr);
            },
            [&](const ForestParams& p) -> LearnedState { return fit_forest(p, x, y, seed); },
            [&](const KnnParams& p) -> LearnedState { return fit_knn(p, x, y); },
            [&](const GnbParams& p) -> LearnedState { return fit_gnb(p, x, y); },
            [&](const ConstantParams& p) -> LearnedState { return ConstantState{p.value}; },
            [&](const LeakProbeParams&) -> LearnedState { return LeakProbeState{x}; },
        },
        spec.params);
    return model;
}

Vector predict_proba(const FittedBaseModel& model, const Matrix& x) {
    if (static_cast<std::size_t>(x.cols()) != model.feature_count)
        throw DataError("learner '" + model.spec.name + "': expected " + std::to_string(model.feature_count) +
                        " feature columns, got " + std::to_string(x.cols()));
    if (!x.allFinite()) throw DataError("learner '" + model.spec.name + "': input has non-finite values");
    Vector out = std::visit(overloaded{
                                [&](const LogisticState& s) { return score_logistic(s, x); },
                                [&](const TreeState& s) { return score_tree(s, x); },
                                [&](const ForestState& s) { return score_forest(s, x); },
                                [&](const KnnState& s) { return score_knn(s, x); },
                                [&](const GnbState& s) { return score_gnb(s, x); },
                                [&](const ConstantState& s) { return Vector(Vector::Constant(x.rows(), s.value)); },
                                [&](const LeakProbeState& s) { return score_probe(s, x); },
                            },
                            model.state);
    return out.cwiseMax(0.0).cwiseMin(1.0);
}

LossGradient logistic_loss_gradient(const Vector& weights, double bias, const Matrix& x, const Labels& y, double l2) {
    const auto n = x.rows();
    const Vector margin = (x * weights).array() + bias;
    Vector residual(n);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double target = y[static_cast<std::size_t>(i)];
        loss += softplus(margin(i)) - target * margin(i);
        residual(i) = sigmoid(margin(i)) - target;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    LossGradient g;
    g.loss = loss * inv_n + 0.5 * l2 * weights.squaredNorm();
    g.weights = x.transpose() * residual * inv_n + l2 * weights;
    g.bias = residual.sum() * inv_n;
    return g;
}

}  // namespace ei
