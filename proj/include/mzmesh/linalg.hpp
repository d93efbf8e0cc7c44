#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "mzmesh/rng.hpp"

namespace mzmesh {

using Complex = std::complex<double>;
using CVector = std::vector<Complex>;

// Dense row-major complex matrix. Mesh sizes stay small (tens of ports), so
// no sparse or blocked storage.
class CMatrix {
  public:
    CMatrix() = default;
    CMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

    static CMatrix identity(std::size_t n) {
        CMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    Complex& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const Complex& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    Complex* row(std::size_t i) { return data_.data() + i * cols_; }
    const Complex* row(std::size_t i) const { return data_.data() + i * cols_; }

    const std::vector<Complex>& data() const { return data_; }

  private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<Complex> data_;
};

inline bool finite(const Complex& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

inline bool all_finite(const CMatrix& m) {
    for (const auto& z : m.data())
        if (!finite(z)) return false;
    return true;
}

inline CMatrix matmul(const CMatrix& a, const CMatrix& b) {
    if (a.cols() != b.rows())
        throw std::invalid_argument("matmul: dimension mismatch (" + std::to_string(a.rows()) + "x" +
                                    std::to_string(a.cols()) + " times " + std::to_string(b.rows()) +
                                    "x" + std::to_string(b.cols()) + ")");
    CMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const Complex aik = a(i, k);
            if (aik == Complex{}) continue;
            const Complex* brow = b.row(k);
            Complex* crow = c.row(i);
            for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

inline CVector matvec(const CMatrix& m, const CVector& v) {
    if (m.cols() != v.size()) throw std::invalid_argument("matvec: dimension mismatch");
    CVector out(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        Complex acc{};
        const Complex* row = m.row(i);
        for (std::size_t j = 0; j < v.size(); ++j) acc += row[j] * v[j];
        out[i] = acc;
    }
    return out;
}

inline CMatrix dagger(const CMatrix& m) {
    CMatrix out(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = std::conj(m(i, j));
    return out;
}

// Max-abs entry of (m†m - I); zero iff m is exactly unitary.
inline double unitarity_defect(const CMatrix& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("unitarity_defect: matrix not square");
    const std::size_t n = m.rows();
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            Complex acc{};
            for (std::size_t k = 0; k < n; ++k) acc += std::conj(m(k, i)) * m(k, j);
            if (i == j) acc -= 1.0;
            worst = std::max(worst, std::abs(acc));
        }
    }
    return worst;
}

// n x n identity with rows/cols (i, j) replaced by a 2x2 block.
inline CMatrix embed_2x2(const CMatrix& block, std::size_t n, std::size_t i, std::size_t j) {
    if (block.rows() != 2 || block.cols() != 2) throw std::invalid_argument("embed_2x2: block must be 2x2");
    if (!(i < j && j < n))
        throw std::invalid_argument("embed_2x2: indices out of range (i=" + std::to_string(i) +
                                    ", j=" + std::to_string(j) + ", n=" + std::to_string(n) + ")");
    CMatrix m = CMatrix::identity(n);
    m(i, i) = block(0, 0);
    m(i, j) = block(0, 1);
    m(j, i) = block(1, 0);
    m(j, j) = block(1, 1);
    return m;
}

inline double power(const CVector& v) {
    double p = 0.0;
    for (const auto& z : v) p += std::norm(z);
    return p;
}

inline double max_abs_diff(const CMatrix& a, const CMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("max_abs_diff: shape mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) worst = std::max(worst, std::abs(a(i, j) - b(i, j)));
    return worst;
}

inline double frobenius_distance(const CMatrix& a, const CMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("frobenius_distance: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) acc += std::norm(a(i, j) - b(i, j));
    return std::sqrt(acc);
}

namespace detail {

// One dominant-eigenpair extraction from a Hermitian PSD matrix by power
// iteration. Returns the Rayleigh quotient; v holds the eigenvector.
inline double power_iteration(const CMatrix& h, CVector& v, int max_iter, double tol) {
    const std::size_t n = h.rows();
    double lambda = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        CVector w = matvec(h, v);
        const double nw = std::sqrt(power(w));
        if (nw == 0.0) return 0.0;
        for (auto& z : w) z /= nw;
        double next = 0.0;
        CVector hw = matvec(h, w);
        for (std::size_t i = 0; i < n; ++i) next += (std::conj(w[i]) * hw[i]).real();
        v = std::move(w);
        if (std::abs(next - lambda) <= tol * std::max(1.0, std::abs(next))) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    return lambda;
}

}  // namespace detail

// All singular values in descending order, via power iteration with Hotelling
// deflation on m†m. Iterative by design; accuracy is ample for the port counts
// used here.
inline std::vector<double> singular_values(const CMatrix& m, int max_iter = 4000, double tol = 1e-15) {
    const std::size_t n = m.cols();
    CMatrix h(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            Complex acc{};
            for (std::size_t k = 0; k < m.rows(); ++k) acc += std::conj(m(k, i)) * m(k, j);
            h(i, j) = acc;
        }
    rng::Stream seed(0x5157ULL);
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
        CVector v(n);
        for (std::size_t i = 0; i < n; ++i)
            v[i] = Complex(seed.uniform(2 * (s * n + i)) - 0.5, seed.uniform(2 * (s * n + i) + 1) - 0.5);
        const double nv = std::sqrt(power(v));
        for (auto& z : v) z /= nv;
        const double lambda = detail::power_iteration(h, v, max_iter, tol);
        out.push_back(std::sqrt(std::max(0.0, lambda)));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) h(i, j) -= lambda * v[i] * std::conj(v[j]);
    }
    std::sort(out.rbegin(), out.rend());
    return out;
}

inline double largest_singular_value(const CMatrix& m, int max_iter = 4000, double tol = 1e-15) {
    const std::size_t n = m.cols();
    CMatrix h(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            Complex acc{};
            for (std::size_t k = 0; k < m.rows(); ++k) acc += std::conj(m(k, i)) * m(k, j);
            h(i, j) = acc;
        }
    rng::Stream seed(0x5157ULL);
    CVector v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = Complex(seed.uniform(2 * i) - 0.5, seed.uniform(2 * i + 1) - 0.5);
    const double nv = std::sqrt(power(v));
    for (auto& z : v) z /= nv;
    return std::sqrt(std::max(0.0, detail::power_iteration(h, v, max_iter, tol)));
}

}  // namespace mzmesh
