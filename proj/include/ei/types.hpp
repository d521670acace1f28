#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace ei {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Labels = std::vector<int>;
using Seed = std::uint64_t;
using Rng = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives a child seed as a pure function of a master seed and a path of
/// task coordinates. Any change to any coordinate yields an unrelated seed.
inline Seed derive_seed(Seed master, std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t h = mix64(master);
    for (auto p : path) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
    return h;
}

/// FNV-1a, used to turn string identifiers into seed coordinates.
constexpr std::uint64_t hash_string(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Rows of `x` selected by `rows`, in the given order.
Matrix take_rows(const Matrix& x, const std::vector<std::size_t>& rows);
Labels take(const Labels& y, const std::vector<std::size_t>& rows);

}  // namespace ei
