// Copyright 2026 The spem Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Small dense linear algebra: everything here works on matrices of at most a
// few dozen rows, so the kernels are plain loops over row-major storage.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spem/errors.hpp"

namespace spem {

using cplx = std::complex<double>;

template <typename T>
inline double abs2(const T &v) {
    return std::norm(v);
}
template <>
inline double abs2<double>(const double &v) {
    return v * v;
}

template <typename T>
inline T conj_of(const T &v) {
    if constexpr (std::is_same_v<T, double>) {
        return v;
    } else {
        return std::conj(v);
    }
}

/// Dense row-major matrix over double or std::complex<double>.
template <typename T>
class Matrix {
public:
    using value_type = T;

    Matrix() = default;
    Matrix(size_t rows, size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, T(0)) {}
    Matrix(size_t rows, size_t cols, std::vector<T> data) : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) {
            throw NumericError("matrix entry count " + std::to_string(data_.size()) + " does not match " +
                               std::to_string(rows_) + "x" + std::to_string(cols_));
        }
    }
    Matrix(std::initializer_list<std::initializer_list<T>> rows) {
        rows_ = rows.size();
        cols_ = rows_ == 0 ? 0 : rows.begin()->size();
        data_.reserve(rows_ * cols_);
        for (const auto &r : rows) {
            if (r.size() != cols_) {
                throw NumericError("ragged matrix initializer");
            }
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    static Matrix identity(size_t n) {
        Matrix m(n, n);
        for (size_t i = 0; i < n; ++i) {
            m(i, i) = T(1);
        }
        return m;
    }

    static Matrix diagonal(std::span<const T> d) {
        Matrix m(d.size(), d.size());
        for (size_t i = 0; i < d.size(); ++i) {
            m(i, i) = d[i];
        }
        return m;
    }

    size_t rows() const { return rows_; }
    size_t cols() const { return cols_; }
    bool square() const { return rows_ == cols_; }

    T &operator()(size_t r, size_t c) { return data_[r * cols_ + c]; }
    const T &operator()(size_t r, size_t c) const { return data_[r * cols_ + c]; }

    std::span<T> row(size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const T> row(size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<T> column(size_t c) const {
        std::vector<T> out(rows_);
        for (size_t r = 0; r < rows_; ++r) {
            out[r] = (*this)(r, c);
        }
        return out;
    }

    std::span<T> data() { return data_; }
    std::span<const T> data() const { return data_; }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](const T &v) {
            if constexpr (std::is_same_v<T, double>) {
                return std::isfinite(v);
            } else {
                return std::isfinite(v.real()) && std::isfinite(v.imag());
            }
        });
    }

    Matrix adjoint() const {
        Matrix out(cols_, rows_);
        for (size_t r = 0; r < rows_; ++r) {
            for (size_t c = 0; c < cols_; ++c) {
                out(c, r) = conj_of((*this)(r, c));
            }
        }
        return out;
    }

    Matrix transpose() const {
        Matrix out(cols_, rows_);
        for (size_t r = 0; r < rows_; ++r) {
            for (size_t c = 0; c < cols_; ++c) {
                out(c, r) = (*this)(r, c);
            }
        }
        return out;
    }

    Matrix block(size_t r0, size_t c0, size_t nr, size_t nc) const {
        Matrix out(nr, nc);
        for (size_t r = 0; r < nr; ++r) {
            for (size_t c = 0; c < nc; ++c) {
                out(r, c) = (*this)(r0 + r, c0 + c);
            }
        }
        return out;
    }

    void set_block(size_t r0, size_t c0, const Matrix &b) {
        for (size_t r = 0; r < b.rows(); ++r) {
            for (size_t c = 0; c < b.cols(); ++c) {
                (*this)(r0 + r, c0 + c) = b(r, c);
            }
        }
    }

    T trace() const {
        T acc(0);
        for (size_t i = 0; i < std::min(rows_, cols_); ++i) {
            acc += (*this)(i, i);
        }
        return acc;
    }

    Matrix &operator+=(const Matrix &o) {
        check_same_shape(o);
        for (size_t i = 0; i < data_.size(); ++i) {
            data_[i] += o.data_[i];
        }
        return *this;
    }
    Matrix &operator-=(const Matrix &o) {
        check_same_shape(o);
        for (size_t i = 0; i < data_.size(); ++i) {
            data_[i] -= o.data_[i];
        }
        return *this;
    }
    Matrix &operator*=(const T &s) {
        for (auto &v : data_) {
            v *= s;
        }
        return *this;
    }

    friend Matrix operator+(Matrix a, const Matrix &b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix &b) { return a -= b; }
    friend Matrix operator*(Matrix a, const T &s) { return a *= s; }
    friend Matrix operator*(const T &s, Matrix a) { return a *= s; }

    friend Matrix operator*(const Matrix &a, const Matrix &b) {
        if (a.cols_ != b.rows_) {
            throw NumericError("matrix product shape mismatch");
        }
        Matrix out(a.rows_, b.cols_);
        for (size_t i = 0; i < a.rows_; ++i) {
            for (size_t k = 0; k < a.cols_; ++k) {
                const T aik = a(i, k);
                if (aik == T(0)) {
                    continue;
                }
                const T *brow = b.data_.data() + k * b.cols_;
                T *orow = out.data_.data() + i * out.cols_;
                for (size_t j = 0; j < b.cols_; ++j) {
                    orow[j] += aik * brow[j];
                }
            }
        }
        return out;
    }

    friend std::vector<T> operator*(const Matrix &a, std::span<const T> x) {
        if (a.cols_ != x.size()) {
            throw NumericError("matrix-vector shape mismatch");
        }
        std::vector<T> out(a.rows_, T(0));
        for (size_t i = 0; i < a.rows_; ++i) {
            T acc(0);
            for (size_t k = 0; k < a.cols_; ++k) {
                acc += a(i, k) * x[k];
            }
            out[i] = acc;
        }
        return out;
    }
    friend std::vector<T> operator*(const Matrix &a, const std::vector<T> &x) {
        return a * std::span<const T>(x);
    }

    bool operator==(const Matrix &o) const = default;

private:
    void check_same_shape(const Matrix &o) const {
        if (rows_ != o.rows_ || cols_ != o.cols_) {
            throw NumericError("matrix shape mismatch");
        }
    }

    size_t rows_ = 0;
    size_t cols_ = 0;
    std::vector<T> data_;
};

using ComplexMatrix = Matrix<cplx>;
using RealMatrix = Matrix<double>;
using ComplexVector = std::vector<cplx>;

template <typename T>
double frobenius_norm(const Matrix<T> &m) {
    double acc = 0;
    for (const auto &v : m.data()) {
        acc += abs2(v);
    }
    return std::sqrt(acc);
}

template <typename T>
double one_norm(const Matrix<T> &m) {
    double best = 0;
    for (size_t c = 0; c < m.cols(); ++c) {
        double s = 0;
        for (size_t r = 0; r < m.rows(); ++r) {
            s += std::abs(m(r, c));
        }
        best = std::max(best, s);
    }
    return best;
}

template <typename T>
double vector_norm(std::span<const T> v) {
    double acc = 0;
    for (const auto &x : v) {
        acc += abs2(x);
    }
    return std::sqrt(acc);
}

/// Distance of m^H m from the identity, Frobenius.
inline double unitarity_defect(const ComplexMatrix &m) {
    return frobenius_norm(m.adjoint() * m - ComplexMatrix::identity(m.cols()));
}

inline ComplexMatrix to_complex(const RealMatrix &m) {
    ComplexMatrix out(m.rows(), m.cols());
    for (size_t i = 0; i < m.data().size(); ++i) {
        out.data()[i] = m.data()[i];
    }
    return out;
}

/// Kronecker product. The left factor indexes the more significant bits.
template <typename T>
Matrix<T> kron(const Matrix<T> &a, const Matrix<T> &b) {
    Matrix<T> out(a.rows() * b.rows(), a.cols() * b.cols());
    for (size_t ar = 0; ar < a.rows(); ++ar) {
        for (size_t ac = 0; ac < a.cols(); ++ac) {
            const T s = a(ar, ac);
            if (s == T(0)) {
                continue;
            }
            for (size_t br = 0; br < b.rows(); ++br) {
                for (size_t bc = 0; bc < b.cols(); ++bc) {
                    out(ar * b.rows() + br, ac * b.cols() + bc) = s * b(br, bc);
                }
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// QR with positive real diagonal
// ---------------------------------------------------------------------------

struct QrResult {
    ComplexMatrix q;
    ComplexMatrix r;
    /// First diagonal entry of R whose magnitude fell below the rank tolerance.
    std::optional<size_t> rank_deficient_at;
};

/// Householder QR of a square matrix followed by a column-phase fix so that
/// diag(R) is real and non-negative. For full-rank input the factorization is
/// unique under this convention.
inline QrResult qr_positive(const ComplexMatrix &a, double rank_tol = 1e-12) {
    if (!a.square()) {
        throw NumericError("qr_positive needs a square matrix");
    }
    if (!a.all_finite()) {
        throw NumericError("qr_positive input has non-finite entries");
    }
    const size_t n = a.rows();
    ComplexMatrix r = a;
    ComplexMatrix q = ComplexMatrix::identity(n);
    std::vector<cplx> v(n);

    for (size_t k = 0; k + 1 < n; ++k) {
        double col_norm2 = 0;
        for (size_t i = k; i < n; ++i) {
            col_norm2 += std::norm(r(i, k));
        }
        const double col_norm = std::sqrt(col_norm2);
        if (col_norm == 0.0) {
            continue;
        }
        const cplx x0 = r(k, k);
        const cplx phase = std::abs(x0) > 0 ? x0 / std::abs(x0) : cplx(1.0);
        // v = x + phase*||x|| e_k avoids cancellation
        std::fill(v.begin(), v.end(), cplx(0));
        for (size_t i = k; i < n; ++i) {
            v[i] = r(i, k);
        }
        v[k] += phase * col_norm;
        double vnorm2 = 0;
        for (size_t i = k; i < n; ++i) {
            vnorm2 += std::norm(v[i]);
        }
        if (vnorm2 == 0.0) {
            continue;
        }
        // R <- (I - 2 v v^H / v^H v) R
        for (size_t c = k; c < n; ++c) {
            cplx dot(0);
            for (size_t i = k; i < n; ++i) {
                dot += std::conj(v[i]) * r(i, c);
            }
            const cplx f = 2.0 * dot / vnorm2;
            for (size_t i = k; i < n; ++i) {
                r(i, c) -= f * v[i];
            }
        }
        // Q <- Q (I - 2 v v^H / v^H v)
        for (size_t row = 0; row < n; ++row) {
            cplx dot(0);
            for (size_t i = k; i < n; ++i) {
                dot += q(row, i) * v[i];
            }
            const cplx f = 2.0 * dot / vnorm2;
            for (size_t i = k; i < n; ++i) {
                q(row, i) -= f * std::conj(v[i]);
            }
        }
        for (size_t i = k + 1; i < n; ++i) {
            r(i, k) = 0;
        }
    }

    QrResult out;
    const double scale = std::max(1.0, frobenius_norm(a));
    for (size_t k = 0; k < n; ++k) {
        const double mag = std::abs(r(k, k));
        if (mag <= rank_tol * scale && !out.rank_deficient_at) {
            out.rank_deficient_at = k;
        }
        if (mag == 0.0) {
            continue;
        }
        // row k of R times conj(phase), column k of Q times phase
        const cplx phase = r(k, k) / mag;
        for (size_t c = k; c < n; ++c) {
            r(k, c) *= std::conj(phase);
        }
        r(k, k) = mag;
        for (size_t row = 0; row < n; ++row) {
            q(row, k) *= phase;
        }
    }
    out.q = std::move(q);
    out.r = std::move(r);
    return out;
}

// ---------------------------------------------------------------------------
// Hermitian eigendecomposition (cyclic complex Jacobi)
// ---------------------------------------------------------------------------

struct EigenResult {
    std::vector<double> values;  // ascending
    ComplexMatrix vectors;       // columns
};

inline EigenResult herm_eig(const ComplexMatrix &h) {
    if (!h.square()) {
        throw NumericError("herm_eig needs a square matrix");
    }
    if (!h.all_finite()) {
        throw NumericError("herm_eig input has non-finite entries");
    }
    const double norm = frobenius_norm(h);
    if (frobenius_norm(h - h.adjoint()) > 1e-8 * norm) {
        throw NumericError("herm_eig input is not Hermitian");
    }
    const size_t n = h.rows();
    ComplexMatrix a = h;
    for (size_t i = 0; i < n; ++i) {
        a(i, i) = a(i, i).real();
    }
    ComplexMatrix v = ComplexMatrix::identity(n);

    auto off_norm = [&] {
        double s = 0;
        for (size_t i = 0; i < n; ++i) {
            for (size_t j = 0; j < n; ++j) {
                if (i != j) {
                    s += std::norm(a(i, j));
                }
            }
        }
        return std::sqrt(s);
    };

    const double stop = std::numeric_limits<double>::epsilon() * std::max(norm, 1e-300) * 1e-2;
    for (int sweep = 0; sweep < 100 && off_norm() > stop; ++sweep) {
        for (size_t p = 0; p + 1 < n; ++p) {
            for (size_t q = p + 1; q < n; ++q) {
                const double mag = std::abs(a(p, q));
                if (mag <= std::numeric_limits<double>::min()) {
                    continue;
                }
                const double app = a(p, p).real();
                const double aqq = a(q, q).real();
                const cplx eia = a(p, q) / mag;
                const double tau = (aqq - app) / (2.0 * mag);
                const double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                // J = diag(1, conj(eia)) * [[c, s], [-s, c]]
                const cplx jpp = c;
                const cplx jpq = s;
                const cplx jqp = -s * std::conj(eia);
                const cplx jqq = c * std::conj(eia);
                for (size_t k = 0; k < n; ++k) {
                    const cplx akp = a(k, p);
                    const cplx akq = a(k, q);
                    a(k, p) = akp * jpp + akq * jqp;
                    a(k, q) = akp * jpq + akq * jqq;
                }
                for (size_t k = 0; k < n; ++k) {
                    const cplx apk = a(p, k);
                    const cplx aqk = a(q, k);
                    a(p, k) = std::conj(jpp) * apk + std::conj(jqp) * aqk;
                    a(q, k) = std::conj(jpq) * apk + std::conj(jqq) * aqk;
                }
                a(p, q) = 0;
                a(q, p) = 0;
                a(p, p) = a(p, p).real();
                a(q, q) = a(q, q).real();
                for (size_t k = 0; k < n; ++k) {
                    const cplx vkp = v(k, p);
                    const cplx vkq = v(k, q);
                    v(k, p) = vkp * jpp + vkq * jqp;
                    v(k, q) = vkp * jpq + vkq * jqq;
                }
            }
        }
    }

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t x, size_t y) { return a(x, x).real() < a(y, y).real(); });
    EigenResult out;
    out.values.resize(n);
    out.vectors = ComplexMatrix(n, n);
    for (size_t k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]).real();
        for (size_t r = 0; r < n; ++r) {
            out.vectors(r, k) = v(r, order[k]);
        }
    }
    return out;
}

/// Hermitian PSD square root. Eigenvalues in [-clip, 0) are treated as zero.
inline ComplexMatrix psd_sqrt(const ComplexMatrix &h, double clip = 1e-10) {
    const auto eig = herm_eig(h);
    const size_t n = h.rows();
    std::vector<double> roots(n);
    for (size_t k = 0; k < n; ++k) {
        const double lam = eig.values[k];
        if (lam < -clip) {
            throw NumericError("psd_sqrt: eigenvalue " + std::to_string(lam) +
                               " is negative beyond clipping tolerance");
        }
        roots[k] = std::sqrt(std::max(lam, 0.0));
    }
    ComplexMatrix out(n, n);
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) {
            cplx acc(0);
            for (size_t k = 0; k < n; ++k) {
                acc += eig.vectors(i, k) * roots[k] * std::conj(eig.vectors(j, k));
            }
            out(i, j) = acc;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Matrix exponential
// ---------------------------------------------------------------------------

/// Scaling and squaring around a Taylor kernel. The scaled matrix has 1-norm
/// at most 1/2, where the series tail drops below machine epsilon well before
/// 30 terms.
inline ComplexMatrix expm(const ComplexMatrix &a) {
    if (!a.square()) {
        throw NumericError("expm needs a square matrix");
    }
    if (!a.all_finite()) {
        throw NumericError("expm input has non-finite entries");
    }
    const size_t n = a.rows();
    const double norm = one_norm(a);
    int squarings = 0;
    if (norm > 0.5) {
        squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    }
    const ComplexMatrix scaled = a * cplx(std::ldexp(1.0, -squarings));

    ComplexMatrix result = ComplexMatrix::identity(n);
    ComplexMatrix term = ComplexMatrix::identity(n);
    for (int k = 1; k <= 40; ++k) {
        term = term * scaled;
        term *= cplx(1.0 / k);
        result += term;
        if (one_norm(term) <= std::numeric_limits<double>::epsilon() * 1e-2 * one_norm(result)) {
            break;
        }
    }
    for (int s = 0; s < squarings; ++s) {
        result = result * result;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Linear solves
// ---------------------------------------------------------------------------

struct SolveResult {
    std::vector<double> x;
    double condition = 1.0;    // 1-norm condition number
    bool least_squares = false;  // set when condition exceeded the limit
};

namespace detail {

struct LuFactors {
    RealMatrix lu;
    std::vector<size_t> perm;
};

// Returns nullopt when a pivot is zero relative to the matrix scale.
inline std::optional<LuFactors> lu_factor(const RealMatrix &m) {
    const size_t n = m.rows();
    LuFactors f{m, std::vector<size_t>(n)};
    std::iota(f.perm.begin(), f.perm.end(), 0);
    double scale = 0;
    for (double v : m.data()) {
        scale = std::max(scale, std::abs(v));
    }
    if (scale == 0) {
        return std::nullopt;
    }
    auto &a = f.lu;
    for (size_t k = 0; k < n; ++k) {
        size_t piv = k;
        for (size_t i = k + 1; i < n; ++i) {
            if (std::abs(a(i, k)) > std::abs(a(piv, k))) {
                piv = i;
            }
        }
        if (std::abs(a(piv, k)) <= 1e-14 * scale) {
            return std::nullopt;
        }
        if (piv != k) {
            for (size_t c = 0; c < n; ++c) {
                std::swap(a(k, c), a(piv, c));
            }
            std::swap(f.perm[k], f.perm[piv]);
        }
        for (size_t i = k + 1; i < n; ++i) {
            const double l = a(i, k) / a(k, k);
            a(i, k) = l;
            for (size_t c = k + 1; c < n; ++c) {
                a(i, c) -= l * a(k, c);
            }
        }
    }
    return f;
}

inline std::vector<double> lu_solve(const LuFactors &f, std::span<const double> b) {
    const size_t n = b.size();
    std::vector<double> y(n);
    for (size_t i = 0; i < n; ++i) {
        double acc = b[f.perm[i]];
        for (size_t k = 0; k < i; ++k) {
            acc -= f.lu(i, k) * y[k];
        }
        y[i] = acc;
    }
    for (size_t i = n; i-- > 0;) {
        double acc = y[i];
        for (size_t k = i + 1; k < n; ++k) {
            acc -= f.lu(i, k) * y[k];
        }
        y[i] = acc / f.lu(i, i);
    }
    return y;
}

// Column-pivoted Householder least squares with rank truncation.
inline std::vector<double> least_squares(const RealMatrix &m, std::span<const double> b) {
    const size_t rows = m.rows();
    const size_t cols = m.cols();
    RealMatrix a = m;
    std::vector<double> rhs(b.begin(), b.end());
    std::vector<size_t> perm(cols);
    std::iota(perm.begin(), perm.end(), 0);
    const size_t steps = std::min(rows, cols);
    size_t rank = 0;
    double first = 0;
    for (size_t k = 0; k < steps; ++k) {
        size_t best = k;
        double best_norm = -1;
        for (size_t c = k; c < cols; ++c) {
            double s = 0;
            for (size_t r = k; r < rows; ++r) {
                s += a(r, c) * a(r, c);
            }
            if (s > best_norm) {
                best_norm = s;
                best = c;
            }
        }
        if (best != k) {
            for (size_t r = 0; r < rows; ++r) {
                std::swap(a(r, k), a(r, best));
            }
            std::swap(perm[k], perm[best]);
        }
        const double nrm = std::sqrt(best_norm);
        if (k == 0) {
            first = nrm;
        }
        if (nrm <= 1e-12 * first || nrm == 0) {
            break;
        }
        const double alpha = a(k, k) > 0 ? -nrm : nrm;
        std::vector<double> v(rows, 0.0);
        for (size_t r = k; r < rows; ++r) {
            v[r] = a(r, k);
        }
        v[k] -= alpha;
        double vv = 0;
        for (size_t r = k; r < rows; ++r) {
            vv += v[r] * v[r];
        }
        if (vv > 0) {
            for (size_t c = k; c < cols; ++c) {
                double d = 0;
                for (size_t r = k; r < rows; ++r) {
                    d += v[r] * a(r, c);
                }
                d = 2 * d / vv;
                for (size_t r = k; r < rows; ++r) {
                    a(r, c) -= d * v[r];
                }
            }
            double d = 0;
            for (size_t r = k; r < rows; ++r) {
                d += v[r] * rhs[r];
            }
            d = 2 * d / vv;
            for (size_t r = k; r < rows; ++r) {
                rhs[r] -= d * v[r];
            }
        }
        rank = k + 1;
    }
    std::vector<double> z(cols, 0.0);
    for (size_t i = rank; i-- > 0;) {
        double acc = rhs[i];
        for (size_t c = i + 1; c < rank; ++c) {
            acc -= a(i, c) * z[c];
        }
        z[i] = acc / a(i, i);
    }
    std::vector<double> x(cols, 0.0);
    for (size_t c = 0; c < cols; ++c) {
        x[perm[c]] = z[c];
    }
    return x;
}

}  // namespace detail

/// Solves M x = b by partially pivoted LU. The exact 1-norm condition number
/// is computed from the explicit inverse; above `max_condition` the result
/// comes from a rank-truncated least-squares solve and is flagged.
inline SolveResult solve(const RealMatrix &m, std::span<const double> b, double max_condition = 1e6) {
    if (!m.square() || m.rows() != b.size()) {
        throw NumericError("solve: dimension mismatch (" + std::to_string(m.rows()) + "x" +
                           std::to_string(m.cols()) + " vs " + std::to_string(b.size()) + ")");
    }
    if (!m.all_finite()) {
        throw NumericError("solve: calibration matrix has non-finite entries");
    }
    const auto factors = detail::lu_factor(m);
    if (!factors) {
        throw SingularMatrixError("calibration matrix is not invertible (zero pivot in LU)");
    }
    const size_t n = m.rows();
    RealMatrix inv(n, n);
    std::vector<double> e(n, 0.0);
    for (size_t c = 0; c < n; ++c) {
        e[c] = 1.0;
        const auto col = detail::lu_solve(*factors, e);
        for (size_t r = 0; r < n; ++r) {
            inv(r, c) = col[r];
        }
        e[c] = 0.0;
    }
    SolveResult out;
    out.condition = one_norm(m) * one_norm(inv);
    if (out.condition <= max_condition) {
        out.x = detail::lu_solve(*factors, b);
    } else {
        out.x = detail::least_squares(m, b);
        out.least_squares = true;
    }
    return out;
}

inline SolveResult solve(const ComplexMatrix &m, std::span<const double> b, double max_condition = 1e6) {
    RealMatrix re(m.rows(), m.cols());
    for (size_t i = 0; i < m.data().size(); ++i) {
        if (std::abs(m.data()[i].imag()) > 1e-12 * std::max(1.0, std::abs(m.data()[i].real()))) {
            throw NumericError("solve: matrix has non-negligible imaginary entries");
        }
        re.data()[i] = m.data()[i].real();
    }
    return solve(re, b, max_condition);
}

/// 1-norm condition number of a real square matrix (infinity when singular).
inline double condition_number(const RealMatrix &m) {
    const auto factors = detail::lu_factor(m);
    if (!factors) {
        return std::numeric_limits<double>::infinity();
    }
    const size_t n = m.rows();
    double inv_norm = 0;
    std::vector<double> e(n, 0.0);
    for (size_t c = 0; c < n; ++c) {
        e[c] = 1.0;
        const auto col = detail::lu_solve(*factors, e);
        double s = 0;
        for (double v : col) {
            s += std::abs(v);
        }
        inv_norm = std::max(inv_norm, s);
        e[c] = 0.0;
    }
    return one_norm(m) * inv_norm;
}

/// Euclidean projection onto the probability simplex {y >= 0, sum y = 1}.
/// Output entries stay aligned with the input positions.
inline std::vector<double> simplex_project(std::span<const double> x) {
    if (x.empty()) {
        return {};
    }
    for (double v : x) {
        if (!std::isfinite(v)) {
            throw NumericError("simplex_project input has non-finite entries");
        }
    }
    std::vector<double> sorted(x.begin(), x.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double running = 0;
    double theta = 0;
    for (size_t k = 0; k < sorted.size(); ++k) {
        running += sorted[k];
        const double candidate = (running - 1.0) / static_cast<double>(k + 1);
        if (sorted[k] - candidate > 0) {
            theta = candidate;
        }
    }
    std::vector<double> out(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        out[i] = std::max(x[i] - theta, 0.0);
    }
    // absorb rounding so the total is 1 to the last ulp
    double total = 0;
    for (double v : out) {
        total += v;
    }
    if (total > 0) {
        for (double &v : out) {
            v /= total;
        }
    }
    return out;
}

}  // namespace spem
