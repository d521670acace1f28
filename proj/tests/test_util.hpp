#pragma once

#include <doctest.h>

#include <filesystem>
#include <algorithm>
#include <random>
#include <string>

#include "ei/types.hpp"

namespace ei::test {

/// Fresh directory under the system temp dir, removed on scope exit.
struct TempDir {
    std::filesystem::path path;

    TempDir() {
        static std::random_device rd;
        path = std::filesystem::temp_directory_path() / ("ei_test_" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

inline Labels random_labels(std::size_t n, Seed seed) {
    Rng rng(seed);
    Labels y(n);
    for (auto& v : y) v = static_cast<int>(rng() & 1U);
    return y;
}

/// Random labels with at least one of each class.
inline Labels random_two_class(std::size_t n, Rng& rng) {
    for (;;) {
        Labels y(n);
        for (auto& v : y) v = static_cast<int>(rng() & 1U);
        const auto pos = std::count(y.begin(), y.end(), 1);
        if (pos > 0 && pos < static_cast<long>(n)) return y;
    }
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
    std::normal_distribution<double> z(0.0, scale);
    Matrix m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = z(rng);
    return m;
}

template <class E, class F>
void check_throws_containing(F&& f, const std::string& needle) {
    try {
        f();
        FAIL("expected an exception containing '" << needle << "'");
    } catch (const E& e) {
        const std::string what = e.what();
        INFO("message: " << what);
        CHECK(what.find(needle) != std::string::npos);
    }
}

}  // namespace ei::test
