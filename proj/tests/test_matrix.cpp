#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "generators.hpp"
#include "qnetdet/matrix.hpp"

using namespace qnetdet;

namespace {

// Leibniz expansion, feasible for n <= 6.
Complex leibniz_det(const ComplexMatrix& a) {
    const std::size_t n = a.rows();
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    Complex total{};
    do {
        int inversions = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) inversions += p[i] > p[j];
        Complex term = (inversions % 2) ? -1.0 : 1.0;
        for (std::size_t i = 0; i < n; ++i) term *= a(i, p[i]);
        total += term;
    } while (std::next_permutation(p.begin(), p.end()));
    return total;
}

ComplexMatrix with_diagonal(const ComplexMatrix& u, const std::vector<double>& diag) {
    return u * ComplexMatrix::diagonal(diag) * u.adjoint();
}

} // namespace

TEST(ComplexMatrix, ShapeChecks) {
    EXPECT_THROW(ComplexMatrix(2, 2, {1.0, 2.0, 3.0}), Error);
    EXPECT_THROW(ComplexMatrix(1, 1, {Complex(NAN, 0.0)}), Error);
    EXPECT_THROW(determinant(ComplexMatrix(2, 3)), Error);
}

TEST(FourierMatrix, Examples) {
    const auto v1 = fourier_matrix(1);
    EXPECT_NEAR(std::abs(v1(0, 0) - 1.0), 0.0, 1e-15);
    const auto v2 = fourier_matrix(2);
    const double r = 1.0 / std::sqrt(2.0);
    const Complex want[2][2] = {{-r, r}, {r, r}};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) EXPECT_NEAR(std::abs(v2(i, j) - want[i][j]), 0.0, 1e-15);
    for (std::size_t d = 1; d <= 16; ++d) {
        const auto v = fourier_matrix(d);
        EXPECT_LE(max_abs_entry(v * v.adjoint() - ComplexMatrix::identity(d)), 1e-12) << "d=" << d;
    }
}

TEST(FrobeniusNorm, Examples) {
    EXPECT_DOUBLE_EQ(frobenius_norm_sq(ComplexMatrix(3, 3)), 0.0);
    EXPECT_DOUBLE_EQ(frobenius_norm_sq(ComplexMatrix::identity(4)), 4.0);
    const double r = 1.0 / std::sqrt(2.0);
    EXPECT_NEAR(frobenius_norm_sq(ComplexMatrix(2, 2, {r, r, r, r})), 2.0, 1e-15);
}

TEST(Kron, MixedProductProperty) {
    gen::Source src(21);
    for (int t = 0; t < 50; ++t) {
        const auto a = src.matrix(2, 3), b = src.matrix(3, 2), c = src.matrix(3, 2), d = src.matrix(2, 3);
        const auto lhs = kron(a, b) * kron(c, d);
        const auto rhs = kron(a * c, b * d);
        EXPECT_LE(max_abs_entry(lhs - rhs), 1e-12);
    }
}

TEST(SingularValues, Examples) {
    EXPECT_EQ(singular_values_desc(ComplexMatrix::identity(3)), (std::vector<double>{1, 1, 1}));
    const std::vector<double> d34{3.0, 4.0};
    EXPECT_EQ(singular_values_desc(ComplexMatrix::diagonal(d34)), (std::vector<double>{4, 3}));
    ComplexMatrix a(3, 1, {1.0, Complex(0, 2), 2.0}), b(2, 1, {3.0, Complex(0, 4)});
    const auto sv = singular_values_desc(a * b.adjoint());
    ASSERT_EQ(sv.size(), 2u);
    EXPECT_NEAR(sv[0], 3.0 * 5.0, 1e-12);
    EXPECT_NEAR(sv[1], 0.0, 1e-12);
}

TEST(SingularValues, RecoversConstructedSpectrum) {
    gen::Source src(22);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = src.index(1, 8);
        std::vector<double> s(n);
        for (double& e : s) e = src.unit() * 3.0;
        const auto m = src.unitary(n) * ComplexMatrix::diagonal(s) * src.unitary(n);
        std::sort(s.begin(), s.end(), std::greater<>());
        EXPECT_LE(gen::max_abs_diff(singular_values_desc(m), s), 1e-12);
    }
}

TEST(SingularValues, RectangularMatchesGramEigenvalues) {
    gen::Source src(23);
    for (int t = 0; t < 100; ++t) {
        const std::size_t r = src.index(1, 6), c = src.index(1, 6);
        const auto m = src.matrix(r, c);
        const auto sv = singular_values_desc(m);
        auto ev = hermitian_eigenvalues_desc(r >= c ? m.adjoint() * m : m * m.adjoint());
        ASSERT_EQ(sv.size(), ev.size());
        for (std::size_t i = 0; i < sv.size(); ++i) EXPECT_NEAR(sv[i] * sv[i], ev[i], 1e-10);
    }
}

TEST(HermitianEigen, Examples) {
    const std::vector<double> d{0.1, 0.9};
    EXPECT_EQ(hermitian_eigenvalues_desc(ComplexMatrix::diagonal(d)), (std::vector<double>{0.9, 0.1}));
    EXPECT_EQ(hermitian_eigenvalues_desc(ComplexMatrix(1, 1, {2.5})), (std::vector<double>{2.5}));
    EXPECT_THROW(hermitian_eigen(ComplexMatrix(2, 2, {0.0, 1.0, 0.0, 0.0})), Error);
    EXPECT_THROW(hermitian_eigen(ComplexMatrix(2, 3)), Error);
}

TEST(HermitianEigen, ConstructThenRecover) {
    gen::Source src(24);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = src.index(1, 12);
        std::vector<double> a(n);
        for (double& e : a) e = src.normal();
        const auto h = with_diagonal(src.unitary(n), a);
        const auto eig = hermitian_eigen(h);
        std::sort(a.begin(), a.end(), std::greater<>());
        EXPECT_LE(gen::max_abs_diff(eig.values, a), 1e-10);
        // Eigenvectors reconstruct H and are orthonormal.
        EXPECT_LE(max_abs_entry(with_diagonal(eig.vectors, eig.values) - h), 1e-10);
        EXPECT_LE(max_abs_entry(eig.vectors.adjoint() * eig.vectors - ComplexMatrix::identity(n)), 1e-12);
    }
}

TEST(Determinant, MatchesLeibniz) {
    gen::Source src(25);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = src.index(1, 6);
        const auto m = src.matrix(n, n);
        const Complex want = leibniz_det(m);
        EXPECT_LE(std::abs(determinant(m) - want), 1e-10 * std::max(1.0, std::abs(want)));
    }
    EXPECT_EQ(determinant(ComplexMatrix(2, 2)), Complex{});
}

TEST(InverseSqrt, SquaresToInverse) {
    gen::Source src(26);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = src.index(1, 8);
        const auto g = src.matrix(n + 2, n);
        const auto tm = g.adjoint() * g;
        const auto r = inverse_sqrt_psd(tm);
        EXPECT_LE(max_abs_entry(r * tm * r - ComplexMatrix::identity(n)), 1e-9);
    }
}

TEST(InverseSqrt, SingularThrows) {
    try {
        inverse_sqrt_psd(ComplexMatrix(2, 2, {1.0, 1.0, 1.0, 1.0}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SingularNormalizer);
    }
}
