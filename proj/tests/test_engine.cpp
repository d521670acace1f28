#include <doctest.h>

#include <algorithm>

#include "ei/engine.hpp"
#include "ei/error.hpp"
#include "ei/metrics.hpp"
#include "test_util.hpp"

using namespace ei;

namespace {

MultiModalDataset small_dataset(std::size_t n, Seed seed, std::size_t modalities = 1) {
    SyntheticSpec spec{n, {}, 0.0, seed};
    for (std::size_t m = 0; m < modalities; ++m) spec.modalities.push_back({3, 1, 1.0});
    return generate_synthetic(spec);
}

std::vector<LearnerSpec> learners(std::initializer_list<const char*> names) {
    std::vector<LearnerSpec> out;
    for (auto n : names) out.push_back(make_learner(n));
    return out;
}

}  // namespace

TEST_CASE("matrix shapes for n=8, k_outer=k_inner=2") {
    const auto ds = small_dataset(8, 1);
    EnsembleIntegration engine({2, 2, 3, CvMode::both});
    engine.fit_base(ds, assign_all(ds, learners({"gnb"})));
    const auto folds = engine.outer_folds();
    REQUIRE(folds.size() == 2);
    for (const auto& f : folds) {
        CHECK(f.train_data.scores.rows() == 4);
        CHECK(f.train_data.scores.cols() == 1);
        CHECK(f.test_data.scores.rows() == 4);
        CHECK(f.test_data.scores.cols() == 1);
        CHECK(f.train_data.rows == f.train);
        CHECK(f.test_data.rows == f.test);
    }
    const auto final_data = engine.final_training_data();
    CHECK(final_data.scores.rows() == 8);
    CHECK(final_data.scores.cols() == 1);
}

TEST_CASE("leak probe never sees the sample it scores") {
    for (Seed seed : {0u, 1u, 2u}) {
        const auto ds = small_dataset(40, seed, 2);
        EnsembleIntegration engine({3, 3, seed, CvMode::both}, 3);
        engine.fit_base(ds, assign_all(ds, learners({"leak_probe", "gnb"})));
        const auto keys = engine.column_keys();
        for (const auto& f : engine.outer_folds()) {
            for (std::size_t c = 0; c < keys.size(); ++c) {
                if (keys[c].learner != "leak_probe") continue;
                CHECK((f.train_data.scores.col(static_cast<Eigen::Index>(c)).array() == 0.0).all());
                CHECK((f.test_data.scores.col(static_cast<Eigen::Index>(c)).array() == 0.0).all());
            }
        }
        const auto fin = engine.final_training_data();
        for (std::size_t c = 0; c < keys.size(); ++c)
            if (keys[c].learner == "leak_probe") CHECK((fin.scores.col(static_cast<Eigen::Index>(c)).array() == 0.0).all());
        // The final refit saw everything, so the probe lights up on training data.
        EnsembleIntegration probe({3, 3, seed, CvMode::build_final});
        probe.fit_base(ds, assign_all(ds, learners({"leak_probe"}))).fit_ensemble({mean_ensemble()});
        CHECK((probe.predict(ds, "mean").array() == 1.0).all());
    }
}

TEST_CASE("outer folds partition the samples") {
    const auto ds = small_dataset(30, 5);
    EnsembleIntegration engine({3, 2, 5, CvMode::evaluate});
    engine.fit_base(ds, assign_all(ds, learners({"gnb"})));
    std::vector<int> seen(30, 0);
    for (const auto& f : engine.outer_folds()) {
        for (auto i : f.test) ++seen[i];
        CHECK(f.train.size() + f.test.size() == 30);
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
}

TEST_CASE("per-modality fit_base calls equal a single call") {
    const auto ds = small_dataset(36, 9, 3);
    const auto roster = learners({"logistic", "forest", "knn"});
    EnsembleIntegration whole({3, 3, 9, CvMode::both});
    whole.fit_base(ds, assign_all(ds, roster));

    EnsembleIntegration split({3, 3, 9, CvMode::both}, 4);
    // Reverse order on purpose: columns still follow dataset order.
    for (std::size_t m = ds.modality_count(); m-- > 0;) split.fit_base(ds, {{ds.modalities[m].name, roster}});
    CHECK(split.base_complete());

    CHECK(whole.column_keys() == split.column_keys());
    const auto a = whole.outer_folds(), b = split.outer_folds();
    REQUIRE(a.size() == b.size());
    for (std::size_t o = 0; o < a.size(); ++o) {
        CHECK(a[o].train_data.scores == b[o].train_data.scores);
        CHECK(a[o].test_data.scores == b[o].test_data.scores);
        CHECK(a[o].train_data.column_keys == b[o].train_data.column_keys);
    }
    CHECK(whole.final_training_data().scores == split.final_training_data().scores);
}

TEST_CASE("results do not depend on the worker count") {
    const auto ds = small_dataset(40, 4, 2);
    const auto roster = learners({"logistic", "tree", "forest", "knn", "gnb"});
    auto run = [&](std::size_t workers) {
        EnsembleIntegration e({3, 3, 4, CvMode::both}, workers);
        e.fit_base(ds, assign_all(ds, roster)).fit_ensemble(default_ensembles());
        return e;
    };
    const auto one = run(1), many = run(8);
    CHECK(one.base_summary() == many.base_summary());
    CHECK(one.ensemble_summary() == many.ensemble_summary());
    CHECK(one.final_training_data().scores == many.final_training_data().scores);
    for (const auto& e : default_ensembles()) CHECK(one.predict(ds, e.id) == many.predict(ds, e.id));
}

TEST_CASE("column order follows dataset then learner order") {
    const auto ds = small_dataset(20, 1, 2);
    EnsembleIntegration engine({2, 2, 1, CvMode::build_final});
    PredictorAssignment a = {{"mod1", learners({"knn", "gnb"})}, {"mod0", learners({"tree"})}};
    engine.fit_base(ds, a);
    const auto keys = engine.column_keys();
    REQUIRE(keys.size() == 3);
    CHECK(keys[0] == ColumnKey{"mod0", "tree"});
    CHECK(keys[1] == ColumnKey{"mod1", "knn"});
    CHECK(keys[2] == ColumnKey{"mod1", "gnb"});
    CHECK(engine.final_training_data().column_keys == keys);
}

TEST_CASE("mean of identical columns reproduces the base predictor") {
    const auto ds = small_dataset(30, 2);
    auto l1 = make_learner("gnb", "g1"), l2 = make_learner("gnb", "g2");
    EnsembleIntegration engine({3, 3, 2, CvMode::evaluate});
    engine.fit_base(ds, {{"mod0", {l1, l2}}}).fit_ensemble({mean_ensemble()});
    const auto& base = engine.base_summary();
    REQUIRE(base.size() == 2);
    const auto& ens = engine.ensemble_summary();
    REQUIRE(ens.size() == 1);
    CHECK(engine.pooled_ensemble_scores()[0].second == engine.pooled_base_scores()[0].second);
    CHECK(ens[0].auc == base[0].auc);
    CHECK(ens[0].fmax == base[0].fmax);
    // Identical pooled scores: identical metrics, ordered by name.
    CHECK(base[0].name == "mod0.g1");
    CHECK(base[1].name == "mod0.g2");
    CHECK(base[0].auc == base[1].auc);
}

TEST_CASE("summaries have one row per predictor and ensemble") {
    const auto ds = small_dataset(30, 3);
    EnsembleIntegration engine({3, 3, 3, CvMode::evaluate});
    engine.fit_base(ds, assign_all(ds, learners({"logistic"})));
    engine.fit_ensemble({mean_ensemble(), median_ensemble(), stacker_ensemble(make_learner("logistic"))});
    CHECK(engine.ensemble_summary().size() == 3);
    const auto& base = engine.base_summary();
    REQUIRE(base.size() == 1);
    // Pooled scores are indexed by dataset row.
    CHECK(base[0].auc == roc_auc(engine.pooled_base_scores()[0].second, ds.labels));
    CHECK(base[0].n_evaluated == 30);
}

TEST_CASE("constant learners give constant predictions") {
    const auto ds = small_dataset(20, 6, 2);
    EnsembleIntegration engine({2, 2, 6, CvMode::build_final});
    engine.fit_base(ds, assign_all(ds, learners({"constant"}))).fit_ensemble({mean_ensemble()});
    Rng rng(1);
    std::map<std::string, Matrix> q = {{"mod0", test::random_matrix(7, 3, rng)}, {"mod1", test::random_matrix(7, 3, rng)}};
    CHECK((engine.predict(q, "mean").array() == 0.5).all());
}

TEST_CASE("mean prediction on training data is the row mean of final base scores") {
    const auto ds = small_dataset(24, 7, 2);
    EnsembleIntegration engine({2, 2, 7, CvMode::build_final});
    engine.fit_base(ds, assign_all(ds, learners({"logistic", "knn"}))).fit_ensemble({mean_ensemble()});
    const auto& fm = engine.final_model();
    Matrix cols(24, 4);
    Eigen::Index c = 0;
    for (std::size_t m = 0; m < 2; ++m)
        for (const auto& model : fm.base_models[m]) cols.col(c++) = predict_proba(model, ds.modalities[m].features);
    CHECK(engine.predict(ds, "mean") == aggregate_mean(cols));
}

TEST_CASE("complementary synthetic data: ensembles beat base predictors and generalize") {
    const SyntheticSpec spec{200, {{5, 2, 0.5}, {5, 2, 0.5}}, 1.0, 1};
    const auto ds = generate_synthetic(spec);
    EnsembleIntegration engine({5, 5, 1, CvMode::both}, 4);
    engine.fit_base(ds, assign_all(ds, default_roster())).fit_ensemble(default_ensembles());
    const double best_base = engine.base_summary().front().auc;
    const auto& best = engine.ensemble_summary().front();
    MESSAGE("best base " << best_base << ", best ensemble " << best.name << " " << best.auc);
    CHECK(best.auc > best_base);

    auto holdout_spec = spec;
    holdout_spec.seed = 2;
    const auto holdout = generate_synthetic(holdout_spec);
    const double auc = roc_auc(engine.predict(holdout, best.name), holdout.labels);
    CHECK(auc >= 0.7);
}

TEST_CASE("engine usage errors") {
    const auto ds = small_dataset(12, 1, 2);
    EnsembleIntegration engine({2, 2, 1, CvMode::both});
    CHECK_THROWS_AS(engine.fit_ensemble({mean_ensemble()}), UsageError);
    CHECK_THROWS_AS(engine.base_summary(), UsageError);
    CHECK_THROWS_AS(engine.fit_base(ds, {{"nope", learners({"gnb"})}}), UsageError);
    CHECK_THROWS_AS(engine.fit_base(ds, {{"mod0", {}}}), UsageError);
    engine.fit_base(ds, {{"mod0", learners({"gnb"})}});
    CHECK_FALSE(engine.base_complete());
    CHECK_THROWS_AS(engine.fit_ensemble({mean_ensemble()}), UsageError);
    engine.fit_base(ds, {{"mod1", learners({"gnb"})}}).fit_ensemble({mean_ensemble()});
    CHECK_THROWS_AS(engine.predict(ds, "missing"), UsageError);
    CHECK_THROWS_AS(engine.predict(std::map<std::string, Matrix>{{"mod0", Matrix::Zero(2, 3)}}, "mean"), DataError);
    CHECK_THROWS_AS(engine.predict(std::map<std::string, Matrix>{{"mod0", Matrix::Zero(2, 3)}, {"mod1", Matrix::Zero(2, 2)}}, "mean"),
                    DataError);
}

TEST_CASE("fold infeasibility surfaces as a data error") {
    const auto ds = small_dataset(6, 1);
    EnsembleIntegration engine({5, 2, 1, CvMode::evaluate});
    CHECK_THROWS_AS(engine.fit_base(ds, assign_all(ds, learners({"gnb"}))), DataError);
}

TEST_CASE("training failures name modality and learner") {
    const auto ds = small_dataset(20, 1);
    auto wild = make_learner("logistic", "wild");
    std::get<LogisticParams>(wild.params).learning_rate = 1e300;
    EnsembleIntegration engine({2, 2, 1, CvMode::both});
    try {
        engine.fit_base(ds, assign_all(ds, {wild}));
        FAIL("expected TrainingError");
    } catch (const TrainingError& e) {
        const std::string what = e.what();
        CHECK(what.find("mod0") != std::string::npos);
        CHECK(what.find("wild") != std::string::npos);
    }
}

TEST_CASE("label-shuffled data stays near chance") {
    auto ds = generate_synthetic({200, {{5, 2, 0.5}, {5, 2, 0.5}}, 1.0, 3});
    Rng rng(3);
    std::shuffle(ds.labels.begin(), ds.labels.end(), rng);
    EnsembleIntegration engine({5, 5, 3, CvMode::evaluate}, 4);
    engine.fit_base(ds, assign_all(ds, default_roster())).fit_ensemble(default_ensembles());
    for (const auto& row : engine.ensemble_summary()) {
        CAPTURE(row.name);
        CHECK(row.auc >= 0.35);
        CHECK(row.auc <= 0.65);
    }
}
