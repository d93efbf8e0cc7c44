#pragma once

// Shared helpers for the test suite. Oracles here are kept independent of the
// library code paths they check: the matrix product is a plain triple loop
// and the minimizers are coarse scans with bisection refinement.

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "mzmesh/linalg.hpp"
#include "mzmesh/rng.hpp"

namespace testutil {

inline mzmesh::CMatrix random_matrix(std::size_t rows, std::size_t cols, mzmesh::rng::Sequence& rng) {
    mzmesh::CMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            m(i, j) = mzmesh::Complex(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0);
    return m;
}

// Triple-loop product, the independent reference for matmul.
inline mzmesh::CMatrix matmul_oracle(const mzmesh::CMatrix& a, const mzmesh::CMatrix& b) {
    mzmesh::CMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            mzmesh::Complex acc{};
            for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
            c(i, j) = acc;
        }
    return c;
}

// Random unitary via Gram-Schmidt on a random complex matrix.
inline mzmesh::CMatrix random_unitary(std::size_t n, mzmesh::rng::Sequence& rng) {
    mzmesh::CMatrix m(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        mzmesh::CVector col(n);
        for (auto& z : col) z = mzmesh::Complex(rng.gaussian(), rng.gaussian());
        for (std::size_t k = 0; k < j; ++k) {
            mzmesh::Complex proj{};
            for (std::size_t i = 0; i < n; ++i) proj += std::conj(m(i, k)) * col[i];
            for (std::size_t i = 0; i < n; ++i) col[i] -= proj * m(i, k);
        }
        const double norm = std::sqrt(mzmesh::power(col));
        for (std::size_t i = 0; i < n; ++i) m(i, j) = col[i] / norm;
    }
    return m;
}

// Dense scan plus ternary-style shrink; independent of the library minimizer.
inline double argmin_scan(const std::function<double(double)>& f, double lo, double hi,
                          int points = 4001, double tol = 1e-11) {
    double best_x = lo, best_v = f(lo);
    const double step = (hi - lo) / (points - 1);
    for (int i = 1; i < points; ++i) {
        const double x = lo + i * step;
        const double v = f(x);
        if (v < best_v) { best_v = v; best_x = x; }
    }
    double a = std::max(lo, best_x - step), b = std::min(hi, best_x + step);
    while (b - a > tol) {
        const double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
        if (f(m1) < f(m2)) b = m2;
        else a = m1;
    }
    return 0.5 * (a + b);
}

}  // namespace testutil
