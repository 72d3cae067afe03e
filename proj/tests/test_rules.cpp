#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "qnetdet/rules.hpp"

using namespace qnetdet;

namespace {

// Closed form at d = 2: C_2 is multiplicative and the trace is one, so the
// top entry is (1 + sqrt(1 - C^2)) / 2.
std::vector<double> swap_d2(const SchmidtVector& x, const SchmidtVector& y) {
    const double c = 4.0 * std::sqrt(x[0] * x[1] * y[0] * y[1]);
    const double top = 0.5 * (1.0 + std::sqrt(std::max(0.0, 1.0 - c * c)));
    return {top, 1.0 - top};
}

// A random isometry split into `count` Kraus blocks of size out x in.
std::vector<ComplexMatrix> random_kraus(gen::Source& src, std::size_t out, std::size_t in, std::size_t count) {
    const auto u = src.unitary(out * count);
    std::vector<ComplexMatrix> ks;
    for (std::size_t a = 0; a < count; ++a) {
        ComplexMatrix k(out, in);
        for (std::size_t i = 0; i < out; ++i)
            for (std::size_t j = 0; j < in; ++j) k(i, j) = u(a * out + i, j);
        ks.push_back(k);
    }
    return ks;
}

} // namespace

TEST(SwapRule, Examples) {
    const auto l = normalize_descending({0.9, 0.1});
    const auto s = swap_rule(l, l);
    EXPECT_NEAR(s[0], (1.0 + std::sqrt(0.8704)) / 2.0, 1e-9);
    EXPECT_NEAR(s[1], (1.0 - std::sqrt(0.8704)) / 2.0, 1e-9);
    const auto y = normalize_descending({0.5, 0.3, 0.2});
    EXPECT_LE(gen::max_abs_diff(swap_rule(SchmidtVector::uniform(3), y).vector(), y.vector()), 1e-12);
    EXPECT_LE(gen::max_abs_diff(swap_rule(SchmidtVector::product_state(3), y).vector(), {1, 0, 0}), 1e-12);
}

TEST(SwapRule, ClosedFormAtDimensionTwo) {
    gen::Source src(31);
    for (int t = 0; t < 2000; ++t) {
        const auto x = src.schmidt(2), y = src.schmidt(2);
        EXPECT_LE(gen::max_abs_diff(swap_rule(x, y).vector(), swap_d2(x, y)), 1e-9);
    }
}

TEST(SwapRule, Properties) {
    gen::Source src(32);
    for (int t = 0; t < 500; ++t) {
        const std::size_t d = src.index(1, 5);
        const auto x = src.schmidt(d), y = src.schmidt(d);
        const auto xy = swap_rule(x, y), yx = swap_rule(y, x);
        EXPECT_LE(gen::max_abs_diff(xy.vector(), yx.vector()), 1e-12);
        // The raw function is trace preserving without renormalization.
        const auto raw = swap_function(x.entries(), y.entries());
        EXPECT_NEAR(trace_vec(raw), 1.0, 1e-12);
        // G-concurrence is multiplicative.
        EXPECT_NEAR(g_concurrence(xy), g_concurrence(x) * g_concurrence(y), 1e-10);
        // Teleportation through a maximally entangled link.
        EXPECT_LE(gen::max_abs_diff(swap_rule(SchmidtVector::uniform(d), y).vector(), y.vector()), 1e-12);
        // Swapping cannot add entanglement across either cut.
        EXPECT_TRUE(majorizes(xy.entries(), x.entries()));
        EXPECT_TRUE(majorizes(xy.entries(), y.entries()));
    }
}

TEST(SwapRule, EigenRouteAgrees) {
    gen::Source src(33);
    for (int t = 0; t < 300; ++t) {
        const std::size_t d = src.index(1, 6);
        const auto x = src.simplex(d), y = src.simplex(d);
        EXPECT_LE(gen::max_abs_diff(swap_function(x, y), swap_function_eig(x, y)), 1e-10);
    }
}

TEST(PurifyRule, Examples) {
    EXPECT_LE(gen::max_abs_diff(purify_rule(std::vector<double>{0.81, 0.09, 0.09, 0.01}, 2).vector(), {0.81, 0.19}),
              1e-15);
    EXPECT_LE(gen::max_abs_diff(purify_rule(std::vector<double>{0.45, 0.45, 0.05, 0.05}, 2).vector(), {0.5, 0.5}),
              1e-15);
    EXPECT_EQ(purify_rule(std::vector<double>{0.5, 0.5}, 2).vector(), (std::vector<double>{0.5, 0.5}));
    EXPECT_THROW(purify(std::vector<double>{1.0}, 2), Error);
    EXPECT_THROW(purify(std::vector<double>{1.0}, 0), Error);
}

TEST(PurifyRule, MajorizesInputAndIsMinimal) {
    gen::Source src(34);
    int minimality_checks = 0;
    for (int t = 0; t < 2000; ++t) {
        const std::size_t d = src.index(1, 4);
        const std::size_t m = d + src.index(0, 5);
        const auto x = src.simplex(m);
        const auto p = purify_rule(x, d);
        EXPECT_TRUE(majorizes(pad_zeros(p.entries(), m), x));
        EXPECT_NEAR(conversion_probability(x, p.vector()), 1.0, 1e-12);
        // Any d-vector reachable with certainty majorizes the purified one.
        const auto mu = src.simplex(d);
        if (majorizes(pad_zeros(mu, m), x)) {
            ++minimality_checks;
            EXPECT_TRUE(majorizes(mu, p.entries()));
        }
    }
    EXPECT_GT(minimality_checks, 100);
}

TEST(PurifyRule, IdentityWithoutExtraEntries) {
    // With m = d every descending entry is at least the mean of its tail.
    gen::Source src(35);
    for (int t = 0; t < 300; ++t) {
        const std::size_t d = src.index(1, 6);
        const auto v = src.schmidt(d).vector();
        EXPECT_LE(gen::max_abs_diff(purify_rule(v, d).vector(), v), 1e-15);
    }
}

TEST(ParallelRule, DoubleEdge) {
    const auto l = normalize_descending({0.9, 0.1});
    const std::vector<SchmidtVector> links{l, l};
    EXPECT_LE(gen::max_abs_diff(parallel_rule(links).vector(), {0.81, 0.19}), 1e-15);
    EXPECT_THROW(parallel_rule(std::span<const SchmidtVector>{}), Error);
}

TEST(ConversionProbability, Examples) {
    EXPECT_NEAR(conversion_probability(normalize_descending({0.9, 0.1}), SchmidtVector::uniform(2)), 0.2, 1e-15);
    EXPECT_DOUBLE_EQ(conversion_probability(SchmidtVector::uniform(2), normalize_descending({0.9, 0.1})), 1.0);
    EXPECT_THROW(conversion_probability(std::vector<double>{1.0}, std::vector<double>{0.5, 0.5}), Error);
}

TEST(ConversionProbability, QubitFormula) {
    gen::Source src(36);
    for (int t = 0; t < 1000; ++t) {
        const auto a = src.schmidt(2), b = src.schmidt(2);
        // the majorization test runs at 1e-9, so near-misses snap to certainty
        const double want = a[1] >= b[1] - 1e-9 ? 1.0 : a[1] / b[1];
        EXPECT_NEAR(conversion_probability(a, b), want, 1e-12);
    }
}

TEST(Povm, DeterministicIsValidAndMatchesSwap) {
    gen::Source src(37);
    for (std::size_t d = 1; d <= 4; ++d) {
        const auto povm = deterministic_swap_povm(d);
        EXPECT_EQ(povm.size(), d * d);
        EXPECT_TRUE(validate_povm(povm));
        for (int t = 0; t < 20; ++t) {
            const auto a = src.schmidt(d), b = src.schmidt(d);
            const auto ens = enumerate_swap_outcomes(a, b, povm);
            const auto want = swap_rule(a, b);
            ASSERT_EQ(ens.size(), d * d);
            for (const auto& o : ens.outcomes()) {
                EXPECT_NEAR(o.probability, 1.0 / static_cast<double>(d * d), 1e-10);
                EXPECT_LE(gen::max_abs_diff(o.state.vector(), want.vector()), 1e-9);
            }
        }
    }
    EXPECT_THROW(deterministic_swap_povm(0), Error);
}

TEST(Povm, BellOutcomes) {
    const auto povm = bell_povm_d2();
    EXPECT_TRUE(validate_povm(povm));
    const auto l = normalize_descending({0.9, 0.1});
    const auto ens = enumerate_swap_outcomes(l, l, povm);
    ASSERT_EQ(ens.size(), 4u);
    const double ps[] = {0.41, 0.41, 0.09, 0.09};
    const double tops[] = {81.0 / 82, 81.0 / 82, 0.5, 0.5};
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_NEAR(ens.outcomes()[i].probability, ps[i], 1e-12);
        EXPECT_NEAR(ens.outcomes()[i].state[0], tops[i], 1e-12);
    }
    const auto flat = enumerate_swap_outcomes(SchmidtVector::uniform(2), SchmidtVector::uniform(2), povm);
    for (const auto& o : flat.outcomes()) {
        EXPECT_NEAR(o.probability, 0.25, 1e-12);
        EXPECT_NEAR(o.state[0], 0.5, 1e-12);
    }
}

TEST(Povm, ProductInputStaysProduct) {
    gen::Source src(38);
    const auto pure = SchmidtVector::product_state(2);
    for (const auto& povm : {bell_povm_d2(), deterministic_swap_povm(2)}) {
        const auto ens = enumerate_swap_outcomes(pure, src.schmidt(2), povm);
        for (const auto& o : ens.outcomes()) EXPECT_NEAR(o.state[0], 1.0, 1e-12);
    }
}

TEST(Povm, Validation) {
    EXPECT_FALSE(validate_povm(Povm({ComplexMatrix::identity(2)})));
    EXPECT_THROW(Povm({}), Error);
    EXPECT_THROW(Povm({ComplexMatrix(2, 2), ComplexMatrix(3, 3)}), Error);
    try {
        enumerate_swap_outcomes(SchmidtVector::uniform(2), SchmidtVector::uniform(2), Povm({ComplexMatrix::identity(2)}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidPovm);
    }
    EXPECT_THROW(enumerate_swap_outcomes(SchmidtVector::uniform(3), SchmidtVector::uniform(3), bell_povm_d2()), Error);
}

TEST(LocalOperations, MixtureMajorizesInput) {
    gen::Source src(39);
    for (int t = 0; t < 300; ++t) {
        const std::size_t d = src.index(2, 4);
        const auto lambda = src.schmidt(d);
        const auto kraus = random_kraus(src, d, d, src.index(1, 4));
        EXPECT_LE(kraus_completeness_error(kraus), 1e-12);
        const auto ens = local_operation_outcomes(lambda.entries(), kraus);
        std::vector<double> mix(d, 0.0);
        for (const auto& o : ens.outcomes())
            for (std::size_t j = 0; j < d; ++j) mix[j] += o.probability * o.state[j];
        EXPECT_TRUE(majorizes(mix, lambda.entries())) << "trial " << t;
    }
}

TEST(LocalOperations, RejectsIncompleteFamily) {
    const std::vector<ComplexMatrix> half{ComplexMatrix::diagonal(std::vector<double>{1.0, 0.0})};
    EXPECT_THROW(local_operation_outcomes(std::vector<double>{0.5, 0.5}, half), Error);
    EXPECT_THROW(local_operation_outcomes(std::vector<double>{0.5, 0.5}, std::span<const ComplexMatrix>{}), Error);
}
