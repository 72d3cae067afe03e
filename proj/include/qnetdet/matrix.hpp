#pragma once

// Small dense complex matrices and the two Jacobi kernels the rules need:
// one-sided (Hestenes) Jacobi for singular values and cyclic Jacobi for
// Hermitian eigenproblems. Sized for d <= 16, with occasional d^2 x d^2 use.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "qnetdet/errors.hpp"

namespace qnetdet {

using Complex = std::complex<double>;

class ComplexMatrix {
public:
    ComplexMatrix() = default;

    ComplexMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, Complex{0.0, 0.0}) {}

    ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<Complex> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_)
            throw Error(ErrorCode::ShapeMismatch, "matrix data does not match rows*cols");
        for (const auto& z : data_)
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
                throw Error(ErrorCode::ShapeMismatch, "matrix entries must be finite");
    }

    static ComplexMatrix identity(std::size_t n) {
        ComplexMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static ComplexMatrix diagonal(std::span<const double> d) {
        ComplexMatrix m(d.size(), d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool square() const noexcept { return rows_ == cols_; }
    std::span<const Complex> data() const noexcept { return data_; }

    Complex& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const Complex& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    ComplexMatrix adjoint() const {
        ComplexMatrix out(cols_, rows_);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c) out(c, r) = std::conj((*this)(r, c));
        return out;
    }

    ComplexMatrix& operator*=(Complex s) {
        for (auto& z : data_) z *= s;
        return *this;
    }

    friend ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
        if (a.cols_ != b.rows_) throw Error(ErrorCode::ShapeMismatch, "matrix product shapes");
        ComplexMatrix out(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const Complex aik = a(i, k);
                if (aik == Complex{}) continue;
                for (std::size_t j = 0; j < b.cols_; ++j) out(i, j) += aik * b(k, j);
            }
        return out;
    }

    friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) {
        if (a.rows_ != b.rows_ || a.cols_ != b.cols_)
            throw Error(ErrorCode::ShapeMismatch, "matrix sum shapes");
        for (std::size_t i = 0; i < a.data_.size(); ++i) a.data_[i] += b.data_[i];
        return a;
    }

    friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) {
        if (a.rows_ != b.rows_ || a.cols_ != b.cols_)
            throw Error(ErrorCode::ShapeMismatch, "matrix difference shapes");
        for (std::size_t i = 0; i < a.data_.size(); ++i) a.data_[i] -= b.data_[i];
        return a;
    }

    /// Scales row r by s[r].
    ComplexMatrix scale_rows(std::span<const double> s) const {
        ComplexMatrix out = *this;
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c) out(r, c) *= s[r];
        return out;
    }

    /// Scales column c by s[c].
    ComplexMatrix scale_cols(std::span<const double> s) const {
        ComplexMatrix out = *this;
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c) out(r, c) *= s[c];
        return out;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Complex> data_;
};

inline double max_abs_entry(const ComplexMatrix& m) {
    double worst = 0.0;
    for (const auto& z : m.data()) worst = std::max(worst, std::abs(z));
    return worst;
}

/// Kronecker product, (a ⊗ b)_{(i k),(j l)} = a_{ij} b_{kl}.
inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            for (std::size_t k = 0; k < b.rows(); ++k)
                for (std::size_t l = 0; l < b.cols(); ++l)
                    out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
    return out;
}

/// V_{μν} = d^{-1/2} exp(-2πiμν/d) with μ, ν = 1..d (1-based, so entry
/// (0,0) of the returned matrix is μ = ν = 1).
inline ComplexMatrix fourier_matrix(std::size_t d) {
    ComplexMatrix v(d, d);
    const double norm = 1.0 / std::sqrt(static_cast<double>(d));
    for (std::size_t mu = 1; mu <= d; ++mu)
        for (std::size_t nu = 1; nu <= d; ++nu) {
            // reduce μν mod d first so the phase argument stays small
            const double frac = static_cast<double>((mu * nu) % d) / static_cast<double>(d);
            v(mu - 1, nu - 1) = norm * std::polar(1.0, -2.0 * std::numbers::pi * frac);
        }
    return v;
}

inline double frobenius_norm_sq(const ComplexMatrix& m) {
    double acc = 0.0;
    for (const auto& z : m.data()) acc += std::norm(z);
    return acc;
}

namespace detail {

inline constexpr double kJacobiThreshold = 1e-14;
inline constexpr int kMaxSweeps = 100;

/// 2x2 unitary U (u_pp, u_pq, u_qp, u_qq) that diagonalizes the Hermitian
/// block [[a, h], [conj(h), b]] via U^H B U.
struct Rotation {
    double c;
    double s;
    Complex phase; // e^{-i arg h}
};

inline Rotation jacobi_rotation(double a, double b, Complex h) {
    const double mag = std::abs(h);
    const double theta = (b - a) / (2.0 * mag);
    const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
    const double c = 1.0 / std::sqrt(t * t + 1.0);
    return Rotation{c, t * c, std::conj(h) / mag};
}

/// Columns p, q of m <- [m_p, m_q] * U, U = [[c, s], [-s φ, c φ]].
inline void rotate_columns(ComplexMatrix& m, std::size_t p, std::size_t q, const Rotation& r) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const Complex mp = m(i, p);
        const Complex mq = m(i, q);
        m(i, p) = r.c * mp - r.s * r.phase * mq;
        m(i, q) = r.s * mp + r.c * r.phase * mq;
    }
}

/// Rows p, q of m <- U^H [m_p; m_q].
inline void rotate_rows(ComplexMatrix& m, std::size_t p, std::size_t q, const Rotation& r) {
    const Complex cphase = std::conj(r.phase);
    for (std::size_t j = 0; j < m.cols(); ++j) {
        const Complex mp = m(p, j);
        const Complex mq = m(q, j);
        m(p, j) = r.c * mp - r.s * cphase * mq;
        m(q, j) = r.s * mp + r.c * cphase * mq;
    }
}

inline double hermitian_deviation(const ComplexMatrix& h) {
    double worst = 0.0;
    for (std::size_t i = 0; i < h.rows(); ++i)
        for (std::size_t j = i; j < h.cols(); ++j)
            worst = std::max(worst, std::abs(h(i, j) - std::conj(h(j, i))));
    return worst;
}

} // namespace detail

struct HermitianEigen {
    std::vector<double> values; // descending
    ComplexMatrix vectors;      // column j pairs with values[j]
};

/// Cyclic Jacobi diagonalization of a Hermitian matrix. Eigenvectors are
/// accumulated only when requested.
inline HermitianEigen hermitian_eigen(const ComplexMatrix& h, bool want_vectors = true) {
    if (!h.square()) throw Error(ErrorCode::NotHermitian, "matrix is not square");
    const double scale = std::max(1.0, max_abs_entry(h));
    if (detail::hermitian_deviation(h) > 1e-10 * scale)
        throw Error(ErrorCode::NotHermitian, "matrix deviates from its adjoint");

    const std::size_t n = h.rows();
    ComplexMatrix a = h;
    for (std::size_t i = 0; i < n; ++i) a(i, i) = a(i, i).real();
    ComplexMatrix v = want_vectors ? ComplexMatrix::identity(n) : ComplexMatrix{};

    const double total = std::sqrt(frobenius_norm_sq(a));
    for (int sweep = 0; sweep < detail::kMaxSweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += std::norm(a(p, q));
        if (std::sqrt(2.0 * off) <= detail::kJacobiThreshold * total) break;

        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const Complex apq = a(p, q);
                if (std::abs(apq) <= 1e-300) continue;
                const auto rot = detail::jacobi_rotation(a(p, p).real(), a(q, q).real(), apq);
                detail::rotate_columns(a, p, q, rot);
                detail::rotate_rows(a, p, q, rot);
                a(p, q) = a(q, p) = 0.0;
                a(p, p) = a(p, p).real();
                a(q, q) = a(q, q).real();
                if (want_vectors) detail::rotate_columns(v, p, q, rot);
            }
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return a(x, x).real() > a(y, y).real(); });

    HermitianEigen out;
    out.values.reserve(n);
    for (std::size_t i : order) out.values.push_back(a(i, i).real());
    if (want_vectors) {
        out.vectors = ComplexMatrix(n, n);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
    }
    return out;
}

inline std::vector<double> hermitian_eigenvalues_desc(const ComplexMatrix& h) {
    return hermitian_eigen(h, false).values;
}

/// Singular values, descending, by one-sided Jacobi on the orientation with
/// fewer columns. Returns min(rows, cols) values.
inline std::vector<double> singular_values_desc(const ComplexMatrix& m) {
    ComplexMatrix g = m.cols() <= m.rows() ? m : m.adjoint();
    const std::size_t n = g.cols();
    if (n == 0) return {};

    auto column_dot = [&](std::size_t p, std::size_t q) {
        Complex acc{};
        for (std::size_t i = 0; i < g.rows(); ++i) acc += std::conj(g(i, p)) * g(i, q);
        return acc;
    };

    for (int sweep = 0; sweep < detail::kMaxSweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const double alpha = column_dot(p, p).real();
                const double beta = column_dot(q, q).real();
                const Complex gamma = column_dot(p, q);
                if (std::abs(gamma) <= detail::kJacobiThreshold * std::sqrt(alpha * beta) ||
                    std::abs(gamma) <= 1e-300)
                    continue;
                rotated = true;
                detail::rotate_columns(g, p, q, detail::jacobi_rotation(alpha, beta, gamma));
            }
        if (!rotated) break;
    }

    std::vector<double> sv(n);
    for (std::size_t j = 0; j < n; ++j) sv[j] = std::sqrt(std::max(column_dot(j, j).real(), 0.0));
    std::sort(sv.begin(), sv.end(), std::greater<>());
    return sv;
}

/// Determinant by LU with partial pivoting.
inline Complex determinant(ComplexMatrix a) {
    if (!a.square()) throw Error(ErrorCode::ShapeMismatch, "determinant of non-square matrix");
    const std::size_t n = a.rows();
    Complex det{1.0, 0.0};
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t pivot = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(a(i, k)) > std::abs(a(pivot, k))) pivot = i;
        if (a(pivot, k) == Complex{}) return Complex{};
        if (pivot != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(pivot, j));
            det = -det;
        }
        det *= a(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            const Complex f = a(i, k) / a(k, k);
            for (std::size_t j = k; j < n; ++j) a(i, j) -= f * a(k, j);
        }
    }
    return det;
}

/// T^{-1/2} for a Hermitian positive definite T. Throws SingularNormalizer
/// when the smallest eigenvalue is below rel_floor * largest.
inline ComplexMatrix inverse_sqrt_psd(const ComplexMatrix& t, double rel_floor = 1e-12) {
    const auto eig = hermitian_eigen(t, true);
    const double top = eig.values.front();
    if (!(top > 0.0) || eig.values.back() <= rel_floor * top)
        throw Error(ErrorCode::SingularNormalizer, "normalizer matrix is (near) singular");
    const std::size_t n = t.rows();
    ComplexMatrix out(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        const double w = 1.0 / std::sqrt(eig.values[k]);
        for (std::size_t i = 0; i < n; ++i) {
            const Complex vik = eig.vectors(i, k) * w;
            for (std::size_t j = 0; j < n; ++j) out(i, j) += vik * std::conj(eig.vectors(j, k));
        }
    }
    return out;
}

} // namespace qnetdet
