#pragma once

// Seeded sampling of Schmidt vectors, Gaussian matrices, POVMs and Kraus
// families. Each (seed, stream name, trial index) triple owns an independent
// generator so trials can be replayed one at a time.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "qnetdet/errors.hpp"
#include "qnetdet/matrix.hpp"
#include "qnetdet/rules.hpp"
#include "qnetdet/schmidt.hpp"

namespace qnetdet {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// FNV-1a, used only to turn a stream name into a 64-bit salt.
inline constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

using Rng = std::mt19937_64;

inline Rng substream(std::uint64_t seed, std::string_view name, std::uint64_t trial) {
    const std::uint64_t k = splitmix64(splitmix64(seed ^ fnv1a(name)) + trial);
    std::seed_seq seq{static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
    return Rng(seq);
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline std::vector<double> dirichlet(Rng& rng, std::size_t n, double alpha) {
    std::gamma_distribution<double> g(alpha, 1.0);
    std::vector<double> v(n);
    double sum = 0.0;
    do {
        sum = 0.0;
        for (double& e : v) sum += (e = g(rng));
    } while (!(sum > 0.0));
    for (double& e : v) e /= sum;
    return v;
}

/// A random Schmidt vector. The concentration parameter itself is drawn so
/// that samples range from nearly pure to nearly uniform.
inline SchmidtVector random_schmidt(Rng& rng, std::size_t d) {
    static constexpr double kAlphas[] = {0.3, 1.0, 4.0};
    const double alpha = kAlphas[uniform_index(rng, 0, 2)];
    return normalize_descending(dirichlet(rng, d, alpha));
}

/// Random Schmidt vector with every entry strictly above `floor`.
inline SchmidtVector random_interior_schmidt(Rng& rng, std::size_t d, double floor) {
    while (true) {
        auto v = dirichlet(rng, d, 1.0);
        if (*std::min_element(v.begin(), v.end()) > floor) return normalize_descending(v);
    }
}

inline Complex complex_gaussian(Rng& rng) {
    std::normal_distribution<double> n(0.0, std::sqrt(0.5));
    const double re = n(rng);
    const double im = n(rng);
    return {re, im};
}

inline ComplexMatrix gaussian_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
    ComplexMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = complex_gaussian(rng);
    return m;
}

inline constexpr double kCompletionTolerance = 1e-12;

/// Right-normalizes a stacked matrix: M T^{-1/2} with T = M^H M, so the
/// result has orthonormal columns. Throws SingularNormalizer when M is too
/// close to rank deficient for the result to be orthonormal to 1e-12.
inline ComplexMatrix complete_stacked(const ComplexMatrix& m) {
    ComplexMatrix out = m * inverse_sqrt_psd(m.adjoint() * m);
    const ComplexMatrix gram = out.adjoint() * out;
    if (max_abs_entry(gram - ComplexMatrix::identity(gram.rows())) > kCompletionTolerance)
        throw Error(ErrorCode::SingularNormalizer, "normalizer too ill-conditioned");
    return out;
}

/// Haar-random unitary (polar factor of a Gaussian matrix).
inline ComplexMatrix random_unitary(Rng& rng, std::size_t n) {
    while (true) {
        try {
            return complete_stacked(gaussian_matrix(rng, n, n));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::SingularNormalizer) throw;
        }
    }
}

namespace detail {

inline constexpr int kResampleAttempts = 64;

template <class Draw>
auto resample_on_singular(Draw&& draw) {
    for (int attempt = 1;; ++attempt) {
        try {
            return draw();
        } catch (const Error& e) {
            if (e.code() != ErrorCode::SingularNormalizer || attempt >= kResampleAttempts) throw;
        }
    }
}

} // namespace detail

/// K random POVM elements of shape rows x cols satisfying the vectorized
/// completeness relation. Needs K >= rows*cols; smaller K cannot span the
/// vectorized identity and raises SingularNormalizer.
inline Povm sample_povm(Rng& rng, std::size_t rows, std::size_t cols, std::size_t count) {
    if (count < 1) throw Error(ErrorCode::EmptyInput, "POVM needs at least one element");
    const std::size_t n = rows * cols;
    if (count < n)
        throw Error(ErrorCode::SingularNormalizer,
                    std::to_string(count) + " elements cannot complete a " + std::to_string(rows) +
                        "x" + std::to_string(cols) + " POVM (need " + std::to_string(n) + ")");
    return detail::resample_on_singular([&] {
        const ComplexMatrix stacked = complete_stacked(gaussian_matrix(rng, count, n));
        std::vector<ComplexMatrix> elements;
        elements.reserve(count);
        for (std::size_t a = 0; a < count; ++a) {
            ComplexMatrix x(rows, cols);
            for (std::size_t i = 0; i < rows; ++i)
                for (std::size_t j = 0; j < cols; ++j) x(i, j) = stacked(a, i * cols + j);
            elements.push_back(std::move(x));
        }
        return Povm(std::move(elements));
    });
}

inline Povm sample_povm(Rng& rng, std::size_t d, std::size_t count) {
    return sample_povm(rng, d, d, count);
}

/// K random Kraus operators of shape out_dim x in_dim with Σ K^H K = I.
/// Needs K * out_dim >= in_dim.
inline std::vector<ComplexMatrix> sample_kraus(Rng& rng, std::size_t out_dim, std::size_t in_dim,
                                               std::size_t count) {
    if (count < 1) throw Error(ErrorCode::EmptyInput, "need at least one Kraus operator");
    if (count * out_dim < in_dim)
        throw Error(ErrorCode::SingularNormalizer, "too few Kraus operators to be complete");
    return detail::resample_on_singular([&] {
        const ComplexMatrix stacked = complete_stacked(gaussian_matrix(rng, count * out_dim, in_dim));
        std::vector<ComplexMatrix> kraus;
        kraus.reserve(count);
        for (std::size_t a = 0; a < count; ++a) {
            ComplexMatrix k(out_dim, in_dim);
            for (std::size_t i = 0; i < out_dim; ++i)
                for (std::size_t j = 0; j < in_dim; ++j) k(i, j) = stacked(a * out_dim + i, j);
            kraus.push_back(std::move(k));
        }
        return kraus;
    });
}

} // namespace qnetdet
