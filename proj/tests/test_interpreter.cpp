#include <doctest.h>

#include <numeric>
#include <set>

#include "ei/error.hpp"
#include "ei/interpreter.hpp"
#include "test_util.hpp"

using namespace ei;

namespace {

Vector labels_vec(const Labels& y) {
    Vector v(static_cast<Eigen::Index>(y.size()));
    for (std::size_t i = 0; i < y.size(); ++i) v(static_cast<Eigen::Index>(i)) = y[i];
    return v;
}

double weight_sum(const ImportanceVector& iv) { return std::accumulate(iv.weights.begin(), iv.weights.end(), 0.0); }

// One informative feature (f0) among noise, single modality.
MultiModalDataset one_informative(Seed seed) { return generate_synthetic({120, {{5, 1, 0.5}}, 0.0, seed}); }

}  // namespace

TEST_CASE("columns the score ignores have zero importance") {
    Rng rng(1);
    const auto x = test::random_matrix(50, 3, rng);
    const auto y = test::random_two_class(50, rng);
    const ScoreFunction uses_col0 = [](const Matrix& m) { return Vector((m.col(0).array().tanh() + 1.0) / 2.0); };
    const auto iv = permutation_importance(uses_col0, x, y, Metric::auc, 5, 3);
    CHECK(iv.raw_drops[1] == 0.0);
    CHECK(iv.raw_drops[2] == 0.0);
    CHECK(iv.weights[1] == 0.0);
    CHECK(iv.weights[2] == 0.0);
}

TEST_CASE("constant score gives all-zero importance") {
    Rng rng(2);
    const auto x = test::random_matrix(30, 4, rng);
    const auto y = test::random_two_class(30, rng);
    const auto iv = permutation_importance([](const Matrix& m) { return Vector(Vector::Constant(m.rows(), 0.5)); }, x,
                                           y, Metric::fmax, 4, 0);
    for (std::size_t c = 0; c < 4; ++c) {
        CHECK(iv.raw_drops[c] == 0.0);
        CHECK(iv.weights[c] == 0.0);
    }
    CHECK(weight_sum(iv) == 0.0);
}

TEST_CASE("identity score on a perfect column: drop is 1 minus shuffled AUC") {
    Rng rng(3);
    const auto y = test::random_two_class(500, rng);
    const Matrix x = labels_vec(y);
    const ScoreFunction identity = [](const Matrix& m) { return Vector(m.col(0)); };
    const auto iv = permutation_importance(identity, x, y, Metric::auc, 3, 21);
    // Replay the seeded shuffles: repeat r permutes rows with derive_seed(seed, {r}).
    double expected = 0.0;
    for (std::uint64_t r = 0; r < 3; ++r) {
        std::vector<std::size_t> perm(500);
        std::iota(perm.begin(), perm.end(), 0);
        Rng shuffle_rng(derive_seed(21, {r}));
        std::shuffle(perm.begin(), perm.end(), shuffle_rng);
        Vector shuffled(500);
        for (Eigen::Index i = 0; i < 500; ++i) shuffled(i) = x(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]), 0);
        expected += 1.0 - roc_auc(shuffled, y);
    }
    expected /= 3.0;
    CHECK(iv.raw_drops[0] == doctest::Approx(expected).epsilon(1e-15));
    CHECK(iv.raw_drops[0] == doctest::Approx(0.5).epsilon(0.1));
    CHECK(iv.weights[0] == 1.0);
}

TEST_CASE("permutation importance is deterministic and normalized") {
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const auto x = test::random_matrix(40, 4, rng);
        const auto y = test::random_two_class(40, rng);
        const Vector w = test::random_matrix(4, 1, rng);
        const ScoreFunction lin = [w](const Matrix& m) { return Vector((m * w).array().tanh() * 0.5 + 0.5); };
        const auto a = permutation_importance(lin, x, y, Metric::auc, 3, trial);
        const auto b = permutation_importance(lin, x, y, Metric::auc, 3, trial);
        CHECK(a.raw_drops == b.raw_drops);
        const double s = weight_sum(a);
        CHECK((s == 0.0 || std::abs(s - 1.0) <= 1e-9));
        for (double v : a.weights) CHECK(v >= 0.0);
    }
}

TEST_CASE("permutation importance argument checks") {
    Rng rng(5);
    const auto x = test::random_matrix(10, 2, rng);
    const auto y = test::random_two_class(10, rng);
    const ScoreFunction f = [](const Matrix& m) { return Vector(m.col(0)); };
    CHECK_THROWS_AS(permutation_importance(f, x, y, Metric::auc, 0, 0), UsageError);
    CHECK_THROWS_AS(permutation_importance(f, x, {0, 0, 0, 0, 0, 0, 0, 0, 0, 0}, Metric::auc, 1, 0), DataError);
}

TEST_CASE("mean over two identical columns splits importance evenly") {
    auto ds = one_informative(1);
    ds.modalities.push_back(ds.modalities[0]);
    ds.modalities[1].name = "copy";
    EnsembleIntegration engine({3, 3, 1, CvMode::build_final});
    engine.fit_base(ds, assign_all(ds, {make_learner("logistic")})).fit_ensemble({mean_ensemble()});
    const auto iv = ensemble_model_importance(engine, "mean", Metric::auc, 10, 4);
    REQUIRE(iv.weights.size() == 2);
    CHECK(iv.weights[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(iv.weights[1] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(iv.keys[0] == "mod0.logistic");
}

TEST_CASE("single-column ensemble gets weight 1") {
    const auto ds = one_informative(2);
    EnsembleIntegration engine({3, 3, 2, CvMode::build_final});
    engine.fit_base(ds, assign_all(ds, {make_learner("logistic")})).fit_ensemble({mean_ensemble()});
    const auto iv = ensemble_model_importance(engine, "mean");
    CHECK(iv.weights == std::vector<double>{1.0});
}

TEST_CASE("greedy selecting one column: other columns and their features score 0") {
    // Hand-built: mod1's columns are pure noise; greedy keeps only the perfect column.
    auto ds = one_informative(3);
    Rng rng(3);
    ds.modalities.push_back({"noise", test::random_matrix(120, 2, rng), {"n0", "n1"}});
    EnsembleIntegration engine({3, 3, 3, CvMode::build_final});
    engine.fit_base(ds, {{"mod0", {make_learner("logistic")}}, {"noise", {make_learner("gnb"), make_learner("knn")}}});
    engine.fit_ensemble({greedy_ensemble(Metric::auc)});
    const auto& model = engine.final_model().ensemble("greedy_auc");
    const std::set<std::size_t> used(model.selection.begin(), model.selection.end());
    MESSAGE("greedy selected " << used.size() << " distinct columns");
    const auto detail = interpret_detailed(engine, ds, "greedy_auc");
    for (std::size_t c = 0; c < 3; ++c)
        if (!used.count(c)) CHECK(detail.model_importance.weights[c] == 0.0);
    if (used == std::set<std::size_t>{0}) {
        for (const auto& r : detail.ranking)
            if (r.modality == "noise") CHECK(r.score == 0.0);
    }
}

TEST_CASE("interpret recovers the single informative feature") {
    int hits = 0;
    for (Seed seed = 0; seed < 5; ++seed) {
        const auto ds = one_informative(seed);
        EnsembleIntegration engine({3, 3, seed, CvMode::build_final});
        engine.fit_base(ds, assign_all(ds, {make_learner("logistic")})).fit_ensemble({mean_ensemble()});
        const auto ranking = interpret(engine, "mean", Metric::auc, 10, seed);
        REQUIRE(ranking.size() == 5);
        hits += ranking[0].feature == "f0";
        CHECK(ranking[0].rank == 1);
    }
    CHECK(hits == 5);
}

TEST_CASE("interpretation with all weight on one base predictor equals its local ranking") {
    const auto ds = one_informative(6);
    EnsembleIntegration engine({3, 3, 6, CvMode::build_final});
    engine.fit_base(ds, assign_all(ds, {make_learner("logistic"), make_learner("constant")}));
    engine.fit_ensemble({mean_ensemble()});
    const auto detail = interpret_detailed(engine, ds, "mean");
    CHECK(detail.model_importance.weights == std::vector<double>{1.0, 0.0});
    const auto& local = detail.local_importance[0][0];
    for (const auto& r : detail.ranking) {
        const auto j = static_cast<std::size_t>(r.feature[1] - '0');
        CHECK(r.score == local.weights[j]);
    }
}

TEST_CASE("all-zero model importance gives zero scores ordered by name") {
    const auto ds = generate_synthetic({40, {{2, 1, 0.5}, {3, 1, 0.5}}, 0.0, 7});
    EnsembleIntegration engine({2, 2, 7, CvMode::build_final});
    engine.fit_base(ds, assign_all(ds, {make_learner("constant")})).fit_ensemble({mean_ensemble()});
    const auto ranking = interpret(engine, "mean");
    REQUIRE(ranking.size() == 5);
    const std::vector<std::pair<std::string, std::string>> order = {
        {"mod0", "f0"}, {"mod0", "f1"}, {"mod1", "f0"}, {"mod1", "f1"}, {"mod1", "f2"}};
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(ranking[i].score == 0.0);
        CHECK(ranking[i].rank == 1);
        CHECK(std::make_pair(ranking[i].modality, ranking[i].feature) == order[i]);
    }
}

TEST_CASE("rank_features uses dense ranks") {
    const auto r = rank_features({{"b", "x", 0.2, 0}, {"a", "y", 0.5, 0}, {"a", "z", 0.2, 0}, {"a", "w", 0.0, 0}});
    REQUIRE(r.size() == 4);
    CHECK(r[0].feature == "y");
    CHECK(r[0].rank == 1);
    CHECK(r[1].modality == "a");
    CHECK(r[1].feature == "z");
    CHECK(r[1].rank == 2);
    CHECK(r[2].feature == "x");
    CHECK(r[2].rank == 2);
    CHECK(r[3].rank == 3);
    CHECK(ranking_to_csv(r).rfind("modality,feature,score,rank\na,y,0.5,1\n", 0) == 0);
}

TEST_CASE("interpretation is deterministic and nonnegative") {
    const auto ds = generate_synthetic({60, {{3, 1, 0.5}, {3, 1, 0.5}}, 0.5, 8});
    EnsembleIntegration engine({3, 3, 8, CvMode::build_final}, 2);
    engine.fit_base(ds, assign_all(ds, default_roster())).fit_ensemble(default_ensembles());
    for (const auto& e : default_ensembles()) {
        const auto a = interpret(engine, e.id, Metric::auc, 3, 1);
        const auto b = interpret(engine, e.id, Metric::auc, 3, 1);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].score == b[i].score);
            CHECK(a[i].score >= 0.0);
        }
    }
    CHECK_THROWS_AS(interpret(engine, "missing"), UsageError);
    CHECK_THROWS_AS(interpret(EnsembleIntegration{}, "mean"), UsageError);
}
