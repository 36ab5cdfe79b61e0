#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "lorank/matrix.hpp"

namespace lorank {

namespace detail {

/// Householder QR of an arbitrary a (m x n). Produces thin q (m x k) with
/// orthonormal columns and upper-trapezoidal r (k x n), k = min(m, n), with
/// exact zeros below the diagonal and non-negative diagonal entries.
inline void householder_qr(const Matrix& a, Matrix& q_out, Matrix& r_out) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    const std::size_t k = std::min(m, n);

    Matrix w = a; // upper part becomes R, reflectors stored below the diagonal
    std::vector<double> tau(k, 0.0);

    for (std::size_t j = 0; j < k; ++j) {
        double tail = 0.0;
        for (std::size_t i = j + 1; i < m; ++i) tail += w(i, j) * w(i, j);
        const double alpha = w(j, j);
        if (tail == 0.0) {
            tau[j] = 0.0; // column already reduced; sign fixed at the end
            continue;
        }
        const double beta = -std::copysign(std::sqrt(alpha * alpha + tail), alpha);
        const double v0 = alpha - beta;
        tau[j] = 2.0 * v0 * v0 / (v0 * v0 + tail);
        const double inv_v0 = 1.0 / v0;
        for (std::size_t i = j + 1; i < m; ++i) w(i, j) *= inv_v0;
        w(j, j) = beta;

        for (std::size_t c = j + 1; c < n; ++c) {
            double dot = w(j, c);
            for (std::size_t i = j + 1; i < m; ++i) dot += w(i, j) * w(i, c);
            const double scale = tau[j] * dot;
            w(j, c) -= scale;
            for (std::size_t i = j + 1; i < m; ++i) w(i, c) -= scale * w(i, j);
        }
    }

    // Accumulate thin Q by applying reflectors to I(:, 0:k) in reverse order.
    Matrix q(m, k);
    for (std::size_t i = 0; i < k; ++i) q(i, i) = 1.0;
    for (std::size_t j = k; j-- > 0;) {
        if (tau[j] == 0.0) continue;
        for (std::size_t c = 0; c < k; ++c) {
            double dot = q(j, c);
            for (std::size_t i = j + 1; i < m; ++i) dot += w(i, j) * q(i, c);
            const double scale = tau[j] * dot;
            q(j, c) -= scale;
            for (std::size_t i = j + 1; i < m; ++i) q(i, c) -= scale * w(i, j);
        }
    }

    Matrix r(k, n);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i; j < n; ++j) r(i, j) = w(i, j);

    // Sign convention: non-negative diagonal of R.
    for (std::size_t j = 0; j < k; ++j) {
        if (r(j, j) < 0.0) {
            for (std::size_t c = j; c < n; ++c) r(j, c) = -r(j, c);
            for (std::size_t i = 0; i < m; ++i) q(i, j) = -q(i, j);
        }
    }

    q_out = std::move(q);
    r_out = std::move(r);
}

} // namespace detail

/// Thin Householder QR: m = q * r with q (rows x cols) orthonormal-column and
/// r (cols x cols) upper-triangular with non-negative diagonal. Requires
/// rows >= cols; transpose first for wide inputs.
inline std::pair<Matrix, Matrix> qr_decompose(const Matrix& m) {
    if (m.empty()) throw ValidationError("qr_decompose: empty matrix");
    if (m.rows() < m.cols()) {
        throw ValidationError("qr_decompose: requires rows >= cols, got " +
                              std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                              "; transpose the input");
    }
    Matrix q, r;
    detail::householder_qr(m, q, r);
    return {std::move(q), std::move(r)};
}

} // namespace lorank
