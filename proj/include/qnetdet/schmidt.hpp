#pragma once

// Schmidt-vector arithmetic, the majorization preorder and the k-concurrence
// family of entanglement monotones.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "qnetdet/errors.hpp"

namespace qnetdet {

/// Absolute tolerance used by every majorization predicate in the library.
inline constexpr double kMajorizationTolerance = 1e-9;

/// A canonical Schmidt vector: nonnegative, sorted descending, trace one.
///
/// Instances can only be produced through normalize_descending() (or the
/// helpers below), so every SchmidtVector in flight satisfies the invariants.
class SchmidtVector {
public:
    static SchmidtVector uniform(std::size_t d) {
        if (d == 0) throw Error(ErrorCode::EmptyInput, "uniform vector of dimension 0");
        return SchmidtVector(std::vector<double>(d, 1.0 / static_cast<double>(d)));
    }

    static SchmidtVector product_state(std::size_t d) {
        if (d == 0) throw Error(ErrorCode::EmptyInput, "product state of dimension 0");
        std::vector<double> v(d, 0.0);
        v[0] = 1.0;
        return SchmidtVector(std::move(v));
    }

    std::span<const double> entries() const noexcept { return values_; }
    const std::vector<double>& vector() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    auto begin() const noexcept { return values_.begin(); }
    auto end() const noexcept { return values_.end(); }

    friend bool operator==(const SchmidtVector&, const SchmidtVector&) = default;

private:
    explicit SchmidtVector(std::vector<double> v) : values_(std::move(v)) {}
    friend SchmidtVector normalize_descending(std::span<const double> raw);

    std::vector<double> values_;
};

/// Sorts a copy of `raw` descending and rescales it to unit trace.
inline SchmidtVector normalize_descending(std::span<const double> raw) {
    if (raw.empty()) throw Error(ErrorCode::EmptyInput, "Schmidt vector must be nonempty");
    double sum = 0.0;
    for (double v : raw) {
        if (!(v >= 0.0)) throw Error(ErrorCode::NegativeEntry, "Schmidt entries must be >= 0");
        sum += v;
    }
    if (!(sum > 0.0)) throw Error(ErrorCode::ZeroSum, "Schmidt entries sum to zero");
    std::vector<double> v(raw.begin(), raw.end());
    std::sort(v.begin(), v.end(), std::greater<>());
    for (double& e : v) e /= sum;
    return SchmidtVector(std::move(v));
}

inline SchmidtVector normalize_descending(std::initializer_list<double> raw) {
    return normalize_descending(std::span<const double>(raw.begin(), raw.size()));
}

/// Rounding noise from eigen/SVD kernels can leave entries like -1e-18;
/// those are snapped to zero before canonicalization.
inline SchmidtVector normalize_clamped(std::span<const double> raw) {
    std::vector<double> v(raw.begin(), raw.end());
    for (double& e : v) e = std::max(e, 0.0);
    return normalize_descending(v);
}

inline std::vector<double> sorted_descending(std::span<const double> x) {
    std::vector<double> v(x.begin(), x.end());
    std::sort(v.begin(), v.end(), std::greater<>());
    return v;
}

/// Appends zeros up to length m (no-op when already that long).
inline std::vector<double> pad_zeros(std::span<const double> x, std::size_t m) {
    std::vector<double> v(x.begin(), x.end());
    if (v.size() < m) v.resize(m, 0.0);
    return v;
}

/// Largest amount by which "x majorizes y" fails: max over k of
/// prefix_k(y) - prefix_k(x), together with the trace mismatch. A value
/// <= tolerance means the relation holds.
inline double majorization_slack(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw Error(ErrorCode::LengthMismatch, "majorization needs equal lengths");
    const auto xs = sorted_descending(x);
    const auto ys = sorted_descending(y);
    double px = 0.0, py = 0.0, worst = -INFINITY;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        px += xs[k];
        py += ys[k];
        worst = std::max(worst, py - px);
    }
    return std::max(worst, std::abs(px - py));
}

/// Same as majorization_slack but without the trace-equality requirement.
inline double weak_majorization_slack(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw Error(ErrorCode::LengthMismatch, "weak majorization needs equal lengths");
    const auto xs = sorted_descending(x);
    const auto ys = sorted_descending(y);
    double px = 0.0, py = 0.0, worst = -INFINITY;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        px += xs[k];
        py += ys[k];
        worst = std::max(worst, py - px);
    }
    return worst;
}

/// True iff x ≻ y, i.e. x MAJORIZES y: every descending prefix sum of x is
/// at least that of y and the totals agree. Note the argument order:
/// majorizes({1, 0}, {0.7, 0.3}) is true.
inline bool majorizes(std::span<const double> x, std::span<const double> y,
                      double tol = kMajorizationTolerance) {
    return majorization_slack(x, y) <= tol;
}

inline bool majorizes(const SchmidtVector& x, const SchmidtVector& y,
                      double tol = kMajorizationTolerance) {
    return majorizes(x.entries(), y.entries(), tol);
}

/// True iff x ≻_w y (y is weakly submajorized by x): prefix sums of x↓
/// dominate those of y↓, totals unconstrained. Works on arbitrary reals,
/// e.g. log-vectors.
inline bool weakly_submajorizes(std::span<const double> x, std::span<const double> y,
                                double tol = kMajorizationTolerance) {
    return weak_majorization_slack(x, y) <= tol;
}

/// Kronecker product of two Schmidt vectors, re-sorted descending.
inline SchmidtVector kron(const SchmidtVector& x, const SchmidtVector& y) {
    std::vector<double> v;
    v.reserve(x.size() * y.size());
    for (double a : x)
        for (double b : y) v.push_back(a * b);
    return normalize_descending(v);
}

/// Unsorted Kronecker product in index order i*|y| + j.
inline std::vector<double> kron_raw(std::span<const double> x, std::span<const double> y) {
    std::vector<double> v;
    v.reserve(x.size() * y.size());
    for (double a : x)
        for (double b : y) v.push_back(a * b);
    return v;
}

/// k-th elementary symmetric polynomial, via the coefficients of ∏(t + x_j).
inline double elementary_symmetric(std::span<const double> x, std::size_t k) {
    if (k > x.size())
        throw Error(ErrorCode::KOutOfRange,
                    "k=" + std::to_string(k) + " exceeds length " + std::to_string(x.size()));
    std::vector<double> e(k + 1, 0.0);
    e[0] = 1.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        for (std::size_t i = std::min(j + 1, k); i >= 1; --i) e[i] += x[j] * e[i - 1];
    }
    return e[k];
}

/// C_k(λ) = [S_k(λ) / S_k(1/d, ..., 1/d)]^(1/k). C_d is the G-concurrence.
inline double concurrence(const SchmidtVector& lambda, std::size_t k) {
    const std::size_t d = lambda.size();
    if (k < 1 || k > d)
        throw Error(ErrorCode::KOutOfRange,
                    "concurrence order k=" + std::to_string(k) + " outside [1, " +
                        std::to_string(d) + "]");
    const std::vector<double> u(d, 1.0 / static_cast<double>(d));
    const double ratio = elementary_symmetric(lambda.entries(), k) / elementary_symmetric(u, k);
    return std::pow(std::max(ratio, 0.0), 1.0 / static_cast<double>(k));
}

/// All of C_1 .. C_d.
inline std::vector<double> concurrences(const SchmidtVector& lambda) {
    std::vector<double> out;
    out.reserve(lambda.size());
    for (std::size_t k = 1; k <= lambda.size(); ++k) out.push_back(concurrence(lambda, k));
    return out;
}

inline double g_concurrence(const SchmidtVector& lambda) {
    return concurrence(lambda, lambda.size());
}

struct Outcome {
    double probability;
    SchmidtVector state;
};

/// Outcomes of a generic (nondeterministic) protocol. Probabilities sum to one.
class ProbabilisticEnsemble {
public:
    static constexpr double kProbabilityTolerance = 1e-10;

    ProbabilisticEnsemble() = default;

    explicit ProbabilisticEnsemble(std::vector<Outcome> outcomes) : outcomes_(std::move(outcomes)) {
        if (outcomes_.empty()) return;
        const std::size_t d = outcomes_.front().state.size();
        double total = 0.0;
        for (const auto& o : outcomes_) {
            if (!(o.probability >= 0.0))
                throw Error(ErrorCode::NegativeEntry, "negative outcome probability");
            if (o.state.size() != d)
                throw Error(ErrorCode::DimensionMismatch, "ensemble states differ in dimension");
            total += o.probability;
        }
        if (std::abs(total - 1.0) > kProbabilityTolerance)
            throw Error(ErrorCode::ZeroSum,
                        "ensemble probabilities sum to " + std::to_string(total));
    }

    const std::vector<Outcome>& outcomes() const noexcept { return outcomes_; }
    bool empty() const noexcept { return outcomes_.empty(); }
    std::size_t size() const noexcept { return outcomes_.size(); }
    std::size_t dimension() const {
        if (outcomes_.empty()) throw Error(ErrorCode::EmptyEnsemble, "empty ensemble");
        return outcomes_.front().state.size();
    }

    /// Σ p_α λ_α↓ (unsorted sum of the canonical vectors).
    std::vector<double> mixture() const {
        std::vector<double> m(dimension(), 0.0);
        for (const auto& o : outcomes_)
            for (std::size_t j = 0; j < m.size(); ++j) m[j] += o.probability * o.state[j];
        return m;
    }

private:
    std::vector<Outcome> outcomes_;
};

inline double average_concurrence(const ProbabilisticEnsemble& e, std::size_t k) {
    if (e.empty()) throw Error(ErrorCode::EmptyEnsemble, "average over empty ensemble");
    double acc = 0.0;
    for (const auto& o : e.outcomes()) acc += o.probability * concurrence(o.state, k);
    return acc;
}

/// min over outcomes with nonzero probability.
inline double worst_case_concurrence(const ProbabilisticEnsemble& e, std::size_t k) {
    if (e.empty()) throw Error(ErrorCode::EmptyEnsemble, "worst case over empty ensemble");
    double worst = INFINITY;
    for (const auto& o : e.outcomes())
        if (o.probability > 0.0) worst = std::min(worst, concurrence(o.state, k));
    if (std::isinf(worst)) throw Error(ErrorCode::EmptyEnsemble, "no outcome has p > 0");
    return worst;
}

inline double det_vec(std::span<const double> x) {
    return std::accumulate(x.begin(), x.end(), 1.0, std::multiplies<>());
}

inline double trace_vec(std::span<const double> x) {
    return std::accumulate(x.begin(), x.end(), 0.0);
}

/// adj(x)_j = ∏_{i≠j} x_i, which equals det(x)/x_j whenever x_j ≠ 0.
inline std::vector<double> adjugate_vec(std::span<const double> x) {
    std::vector<double> adj(x.size(), 1.0);
    for (std::size_t j = 0; j < x.size(); ++j)
        for (std::size_t i = 0; i < x.size(); ++i)
            if (i != j) adj[j] *= x[i];
    return adj;
}

} // namespace qnetdet
