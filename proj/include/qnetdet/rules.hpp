#pragma once

// The series rule (deterministic entanglement swapping), the parallel rule
// (deterministic purification), optimal conversion probabilities, and
// enumeration of generic probabilistic swap outcomes under a POVM.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "qnetdet/errors.hpp"
#include "qnetdet/matrix.hpp"
#include "qnetdet/schmidt.hpp"

namespace qnetdet {

namespace detail {

inline std::vector<double> sqrt_entries(std::span<const double> x) {
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = std::sqrt(std::max(x[i], 0.0));
    return r;
}

/// diag(x↓)^{1/2} V diag(y↓)^{1/2}
inline ComplexMatrix swap_amplitude(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw Error(ErrorCode::DimensionMismatch,
                    "swap needs equal dimensions, got " + std::to_string(x.size()) + " and " +
                        std::to_string(y.size()));
    if (x.empty()) throw Error(ErrorCode::EmptyInput, "swap of empty vectors");
    const auto xs = sqrt_entries(sorted_descending(x));
    const auto ys = sqrt_entries(sorted_descending(y));
    return fourier_matrix(x.size()).scale_rows(xs).scale_cols(ys);
}

} // namespace detail

/// d * σ²(diag(x↓)^{1/2} V diag(y↓)^{1/2}), descending, on arbitrary
/// nonnegative vectors (no renormalization). One-sided Jacobi keeps the
/// small singular values accurate to working precision relative to
/// themselves, which the determinant and adjugate identities depend on.
inline std::vector<double> swap_function(std::span<const double> x, std::span<const double> y) {
    const ComplexMatrix g = detail::swap_amplitude(x, y);
    auto sv = singular_values_desc(g);
    const double d = static_cast<double>(x.size());
    for (double& s : sv) s = s * s * d;
    return sv;
}

/// Same quantity as d * eig(G G^H). Independent route for cross-checks;
/// accurate in absolute terms only.
inline std::vector<double> swap_function_eig(std::span<const double> x, std::span<const double> y) {
    const ComplexMatrix g = detail::swap_amplitude(x, y);
    auto values = hermitian_eigenvalues_desc(g * g.adjoint());
    const double d = static_cast<double>(x.size());
    for (double& v : values) v = std::max(v, 0.0) * d;
    return values;
}

/// Series rule: the Schmidt vector produced deterministically by swapping
/// links x and y through a relay.
inline SchmidtVector swap_rule(const SchmidtVector& x, const SchmidtVector& y) {
    return normalize_clamped(swap_function(x.entries(), y.entries()));
}

/// Purification function on an arbitrary nonnegative vector of length
/// m >= d. Output is descending and has the same trace as the input.
inline std::vector<double> purify(std::span<const double> x, std::size_t d) {
    if (d < 1) throw Error(ErrorCode::DimensionTooSmall, "target dimension must be >= 1");
    if (x.size() < d)
        throw Error(ErrorCode::DimensionTooSmall,
                    "cannot purify length " + std::to_string(x.size()) + " into " +
                        std::to_string(d) + " dimensions");
    const auto xs = sorted_descending(x);
    // Once χ_l exceeds x_l every later entry equals the same running mean,
    // so the remainder is always a plain tail sum of x (no cancellation).
    std::vector<double> tail(xs.size() + 1, 0.0);
    for (std::size_t j = xs.size(); j-- > 0;) tail[j] = tail[j + 1] + xs[j];
    std::vector<double> chi(d);
    for (std::size_t l = 1; l <= d; ++l) {
        const double mean = tail[l - 1] / static_cast<double>(d + 1 - l);
        if (xs[l - 1] >= mean) {
            chi[l - 1] = xs[l - 1];
            continue;
        }
        std::fill(chi.begin() + static_cast<std::ptrdiff_t>(l - 1), chi.end(), mean);
        break;
    }
    return chi;
}

/// Parallel rule on a normalized input: the majorization-minimal
/// d-dimensional vector reachable with certainty.
inline SchmidtVector purify_rule(std::span<const double> x, std::size_t d) {
    return normalize_clamped(purify(x, d));
}

inline SchmidtVector purify_rule(const SchmidtVector& x, std::size_t d) {
    return purify_rule(x.entries(), d);
}

/// Parallel rule applied to several links at once: 𝒫(λ_1 ⊗ ... ⊗ λ_n).
inline SchmidtVector parallel_rule(std::span<const SchmidtVector> links) {
    if (links.empty()) throw Error(ErrorCode::EmptyInput, "parallel rule needs at least one link");
    const std::size_t d = links.front().size();
    SchmidtVector acc = links.front();
    for (std::size_t i = 1; i < links.size(); ++i) {
        if (links[i].size() != d)
            throw Error(ErrorCode::DimensionMismatch, "parallel links differ in dimension");
        acc = kron(acc, links[i]);
        // 𝒫∘⊗ is associative, so folding keeps the vector length bounded
        if (acc.size() > (std::size_t{1} << 16)) acc = purify_rule(acc, d);
    }
    return purify_rule(acc, d);
}

/// Optimal probability of converting a state with Schmidt numbers λ into
/// one with Schmidt numbers `target` (zero-padded to |λ|).
inline double conversion_probability(std::span<const double> lambda, std::span<const double> target) {
    if (target.size() > lambda.size())
        throw Error(ErrorCode::LengthMismatchAfterPadding,
                    "target has more Schmidt numbers than the source");
    const std::size_t m = lambda.size();
    const auto src = sorted_descending(lambda);
    const auto dst = sorted_descending(pad_zeros(target, m));
    if (majorizes(dst, src)) return 1.0;

    double best = 1.0;
    // tails are summed directly rather than as 1 - prefix for accuracy
    for (std::size_t k = 0; k < m; ++k) {
        double num = 0.0, den = 0.0;
        for (std::size_t j = k; j < m; ++j) {
            num += src[j];
            den += dst[j];
        }
        if (den <= 1e-15) continue;
        best = std::min(best, num / den);
    }
    return std::clamp(best, 0.0, 1.0);
}

inline double conversion_probability(const SchmidtVector& lambda, const SchmidtVector& target) {
    return conversion_probability(lambda.entries(), target.entries());
}

/// Measurement at the relay, encoded as matrices X^α obeying the vectorized
/// completeness relation Σ_α conj(X^α_{μν}) X^α_{μ'ν'} = δ_{μμ'} δ_{νν'}.
class Povm {
public:
    explicit Povm(std::vector<ComplexMatrix> elements) : elements_(std::move(elements)) {
        if (elements_.empty()) throw Error(ErrorCode::ShapeMismatch, "POVM has no elements");
        for (const auto& x : elements_)
            if (x.rows() != elements_.front().rows() || x.cols() != elements_.front().cols())
                throw Error(ErrorCode::ShapeMismatch, "POVM elements differ in shape");
    }

    const std::vector<ComplexMatrix>& elements() const noexcept { return elements_; }
    std::size_t size() const noexcept { return elements_.size(); }
    std::size_t rows() const { return elements_.front().rows(); }
    std::size_t cols() const { return elements_.front().cols(); }

private:
    std::vector<ComplexMatrix> elements_;
};

/// max |Σ_α conj(vec X^α) vec(X^α)^T - I| entrywise.
inline double povm_completeness_error(const Povm& povm) {
    const std::size_t n = povm.rows() * povm.cols();
    std::vector<Complex> gram(n * n, Complex{});
    for (const auto& x : povm.elements()) {
        const auto v = x.data();
        for (std::size_t i = 0; i < n; ++i) {
            const Complex ci = std::conj(v[i]);
            if (ci == Complex{}) continue;
            for (std::size_t j = 0; j < n; ++j) gram[i * n + j] += ci * v[j];
        }
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            worst = std::max(worst, std::abs(gram[i * n + j] - (i == j ? 1.0 : 0.0)));
    return worst;
}

inline constexpr double kPovmTolerance = 1e-10;

inline bool validate_povm(const Povm& povm) {
    return povm_completeness_error(povm) <= kPovmTolerance;
}

/// The d^2-outcome measurement whose outcomes all share the Schmidt numbers
/// of swap_rule: X^α_{μν} = d^{-1} exp(-2πi[α(dμ+ν)/d² + μν/d]).
inline Povm deterministic_swap_povm(std::size_t d) {
    if (d < 1) throw Error(ErrorCode::DimensionTooSmall, "POVM dimension must be >= 1");
    const std::size_t d2 = d * d;
    std::vector<ComplexMatrix> elements;
    elements.reserve(d2);
    for (std::size_t alpha = 1; alpha <= d2; ++alpha) {
        ComplexMatrix x(d, d);
        for (std::size_t mu = 1; mu <= d; ++mu)
            for (std::size_t nu = 1; nu <= d; ++nu) {
                const std::size_t a = (alpha * (d * mu + nu)) % d2;
                const std::size_t b = (mu * nu) % d;
                const double turns = static_cast<double>(a) / static_cast<double>(d2) +
                                     static_cast<double>(b) / static_cast<double>(d);
                x(mu - 1, nu - 1) =
                    std::polar(1.0 / static_cast<double>(d), -2.0 * std::numbers::pi * turns);
            }
        elements.push_back(std::move(x));
    }
    return Povm(std::move(elements));
}

/// Two-qubit Bell-type measurement {I, Z, X, XZ}/√2 (as matrices), which on
/// two (0.9, 0.1) links yields outcomes (81/82, 1/82) twice with p = 0.41
/// and (1/2, 1/2) twice with p = 0.09.
inline Povm bell_povm_d2() {
    const double r = 1.0 / std::sqrt(2.0);
    return Povm({
        ComplexMatrix(2, 2, {r, 0.0, 0.0, r}),
        ComplexMatrix(2, 2, {r, 0.0, 0.0, -r}),
        ComplexMatrix(2, 2, {0.0, r, r, 0.0}),
        ComplexMatrix(2, 2, {0.0, r, -r, 0.0}),
    });
}

inline constexpr double kOutcomePruneThreshold = 1e-14;

/// Unnormalized outcome matrices Ψ^α = diag(left)^{1/2} X^α diag(right)^{1/2}
/// for amplitude profiles given in the POVM's own index order.
inline std::vector<ComplexMatrix> swap_outcome_matrices(std::span<const double> left,
                                                        std::span<const double> right,
                                                        const Povm& povm) {
    if (povm.rows() != left.size() || povm.cols() != right.size())
        throw Error(ErrorCode::DimensionMismatch, "POVM shape does not match link dimensions");
    const auto l = detail::sqrt_entries(left);
    const auto r = detail::sqrt_entries(right);
    std::vector<ComplexMatrix> out;
    out.reserve(povm.size());
    for (const auto& x : povm.elements()) out.push_back(x.scale_rows(l).scale_cols(r));
    return out;
}

/// Turns unnormalized outcome matrices into an ensemble: p_α = ||Ψ^α||²,
/// state = σ²(Ψ^α)/p_α. Outcomes with p_α below the prune threshold are
/// dropped.
inline ProbabilisticEnsemble ensemble_from_outcomes(std::span<const ComplexMatrix> psis) {
    std::vector<Outcome> outcomes;
    outcomes.reserve(psis.size());
    for (const auto& psi : psis) {
        const double p = frobenius_norm_sq(psi);
        if (p < kOutcomePruneThreshold) continue;
        auto sv = singular_values_desc(psi);
        for (double& s : sv) s = s * s;
        outcomes.push_back({p, normalize_clamped(sv)});
    }
    return ProbabilisticEnsemble(std::move(outcomes));
}

/// Generic swap: every outcome of measuring the relay with `povm`, in
/// POVM order, on the index-ordered amplitude profiles `left` and `right`.
inline ProbabilisticEnsemble enumerate_swap_outcomes(std::span<const double> left,
                                                     std::span<const double> right,
                                                     const Povm& povm) {
    if (!validate_povm(povm))
        throw Error(ErrorCode::InvalidPovm, "POVM violates the completeness relation");
    const auto psis = swap_outcome_matrices(left, right, povm);
    return ensemble_from_outcomes(psis);
}

inline ProbabilisticEnsemble enumerate_swap_outcomes(const SchmidtVector& a, const SchmidtVector& b,
                                                     const Povm& povm) {
    return enumerate_swap_outcomes(a.entries(), b.entries(), povm);
}

/// max |Σ_α K_α^H K_α - I| entrywise for a family of Kraus operators.
inline double kraus_completeness_error(std::span<const ComplexMatrix> kraus) {
    if (kraus.empty()) return INFINITY;
    const std::size_t n = kraus.front().cols();
    ComplexMatrix acc(n, n);
    for (const auto& k : kraus) acc = acc + k.adjoint() * k;
    return max_abs_entry(acc - ComplexMatrix::identity(n));
}

/// Ensemble produced when one party applies the local Kraus operators K_α
/// to her half of the state diag(λ)^{1/2}: Ψ_α = K_α diag(λ)^{1/2}.
/// The output dimension is K_α.rows(), which may be smaller than |λ|.
inline ProbabilisticEnsemble local_operation_outcomes(std::span<const double> lambda,
                                                      std::span<const ComplexMatrix> kraus) {
    if (kraus.empty()) throw Error(ErrorCode::InvalidPovm, "no Kraus operators");
    if (kraus_completeness_error(kraus) > kPovmTolerance)
        throw Error(ErrorCode::InvalidPovm, "Kraus operators are not complete");
    const auto root = detail::sqrt_entries(lambda);
    std::vector<ComplexMatrix> psis;
    psis.reserve(kraus.size());
    for (const auto& k : kraus) {
        if (k.cols() != lambda.size())
            throw Error(ErrorCode::DimensionMismatch, "Kraus input dimension mismatch");
        psis.push_back(k.scale_cols(root));
    }
    return ensemble_from_outcomes(psis);
}

} // namespace qnetdet
