#include <doctest.h>

#include <cmath>

#include "ei/error.hpp"
#include "ei/metrics.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace ei;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

Vector labels_as_scores(const Labels& y) {
    Vector s(static_cast<Eigen::Index>(y.size()));
    for (std::size_t i = 0; i < y.size(); ++i) s(static_cast<Eigen::Index>(i)) = y[i];
    return s;
}

// Scores on a coarse grid so ties are common.
Vector random_scores(std::size_t n, Rng& rng, int levels) {
    Vector s(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = static_cast<double>(rng() % levels) / levels;
    return s;
}

}  // namespace

TEST_CASE("roc_auc worked examples") {
    CHECK(roc_auc(vec({0.1, 0.4, 0.35, 0.8}), {0, 0, 1, 1}) == 0.75);
    const Labels y = {1, 0, 0, 1, 1, 0, 1};
    CHECK(roc_auc(labels_as_scores(y), y) == 1.0);
    CHECK(roc_auc(Vector::Constant(7, 0.3), y) == 0.5);
}

TEST_CASE("roc_auc rejects single-class labels") {
    CHECK_THROWS_AS(roc_auc(vec({0.1, 0.2}), {1, 1}), DataError);
    CHECK_THROWS_AS(fmax(vec({0.1, 0.2}), {0, 0}), DataError);
}

TEST_CASE("roc_auc matches brute-force pair counting exactly") {
    Rng rng(2024);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t n = 2 + rng() % 30;
        const auto y = test::random_two_class(n, rng);
        const auto s = random_scores(n, rng, 1 + static_cast<int>(rng() % 10));
        CHECK(roc_auc(s, y) == oracle::brute_force_auc(s, y));
    }
}

TEST_CASE("roc_auc complement symmetry without ties") {
    Rng rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + rng() % 40;
        const auto y = test::random_two_class(n, rng);
        Vector s(static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = u(rng);
        const Vector flipped = (1.0 - s.array()).matrix();
        CHECK(roc_auc(flipped, y) == doctest::Approx(1.0 - roc_auc(s, y)).epsilon(1e-15));
    }
}

TEST_CASE("roc_auc is invariant under strictly increasing transforms") {
    Rng rng(8);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + rng() % 40;
        const auto y = test::random_two_class(n, rng);
        const auto s = random_scores(n, rng, 7);
        const Vector t = (3.0 * s.array().cube() + s.array().exp() - 4.0).matrix();
        CHECK(roc_auc(t, y) == roc_auc(s, y));
    }
}

TEST_CASE("fmax worked examples") {
    auto r = fmax(vec({0.9, 0.2, 0.6}), {1, 0, 1});
    CHECK(r.fmax == 1.0);
    CHECK(r.threshold == 0.6);
    CHECK(r.precision == 1.0);
    CHECK(r.recall == 1.0);

    const Labels y = {0, 1, 1, 0, 1};
    r = fmax(labels_as_scores(y), y);
    CHECK(r.fmax == 1.0);
    CHECK(r.threshold == 1.0);

    for (std::size_t n = 2; n <= 12; ++n) {
        for (std::size_t p = 1; p < n; ++p) {
            Labels yy(n, 0);
            std::fill_n(yy.begin(), p, 1);
            r = fmax(Vector::Constant(static_cast<Eigen::Index>(n), 0.5), yy);
            CHECK(r.fmax == doctest::Approx(2.0 * p / static_cast<double>(n + p)).epsilon(1e-15));
            CHECK(r.threshold == 0.5);
        }
    }
}

TEST_CASE("fmax matches exhaustive sweep on all small instances") {
    Rng rng(77);
    for (int trial = 0; trial < 3000; ++trial) {
        const std::size_t n = 2 + rng() % 11;
        const auto y = test::random_two_class(n, rng);
        const auto s = random_scores(n, rng, 1 + static_cast<int>(rng() % 8));
        const auto got = fmax(s, y);
        const auto want = oracle::exhaustive_fmax(s, y);
        CHECK(got.fmax == want.fmax);
        CHECK(got.threshold == want.threshold);
        CHECK(got.fmax >= 0.0);
        CHECK(got.fmax <= 1.0);
    }
}

TEST_CASE("metric names round trip") {
    CHECK(parse_metric("auc") == Metric::auc);
    CHECK(parse_metric("fmax") == Metric::fmax);
    CHECK(metric_name(Metric::fmax) == "fmax");
    CHECK_THROWS_AS(parse_metric("accuracy"), UsageError);
}

TEST_CASE("build_summary ordering") {
    const Labels y = {0, 1, 0, 1};
    SUBCASE("perfect before constant") {
        const auto t = build_summary({{"const", Vector::Constant(4, 0.5)}, {"perfect", labels_as_scores(y)}}, y);
        REQUIRE(t.size() == 2);
        CHECK(t[0].name == "perfect");
        CHECK(t[0].auc == 1.0);
        CHECK(t[0].fmax == 1.0);
        CHECK(t[1].auc == 0.5);
        CHECK(t[0].n_evaluated == 4);
    }
    SUBCASE("identical scores tie-break by name") {
        const auto s = vec({0.3, 0.6, 0.4, 0.2});
        const auto t = build_summary({{"b", s}, {"a", s}}, y);
        REQUIRE(t.size() == 2);
        CHECK(t[0].name == "a");
        CHECK(t[1].name == "b");
        auto ra = t[0], rb = t[1];
        ra.name = rb.name = "";
        CHECK(ra == rb);
    }
    SUBCASE("empty") {
        CHECK(build_summary({}, y).empty());
    }
}

TEST_CASE("summary_to_csv layout") {
    const Labels y = {0, 1};
    const auto csv = summary_to_csv(build_summary({{"x", vec({0.1, 0.7})}}, y));
    CHECK(csv == "name,auc,fmax,fmax_threshold,precision_at_fmax,recall_at_fmax,n_evaluated\nx,1,1,0.7,1,1,2\n");
}
