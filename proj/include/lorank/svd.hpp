#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "lorank/matrix.hpp"

namespace lorank {

/// Thin SVD: u (m x k) with orthonormal columns, k = min(m, n) singular
/// values descending, v_t (k x n) with orthonormal rows.
struct SvdResult {
    Matrix u;
    std::vector<double> singular_values;
    Matrix v_t;
};

inline Matrix reconstruct(const SvdResult& s) {
    const std::size_t m = s.u.rows();
    const std::size_t k = s.singular_values.size();
    const std::size_t n = s.v_t.cols();
    Matrix out(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t t = 0; t < k; ++t) acc += s.u(i, t) * s.singular_values[t] * s.v_t(t, j);
            out(i, j) = acc;
        }
    }
    return out;
}

/// Keeps the leading k triplets.
inline SvdResult truncate_svd(const SvdResult& s, std::size_t k) {
    if (k == 0 || k > s.singular_values.size()) {
        throw ValidationError("truncate_svd: rank " + std::to_string(k) + " out of range");
    }
    SvdResult out;
    out.u = Matrix(s.u.rows(), k);
    for (std::size_t i = 0; i < s.u.rows(); ++i)
        for (std::size_t j = 0; j < k; ++j) out.u(i, j) = s.u(i, j);
    out.singular_values.assign(s.singular_values.begin(), s.singular_values.begin() + k);
    out.v_t = Matrix(k, s.v_t.cols());
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < s.v_t.cols(); ++j) out.v_t(i, j) = s.v_t(i, j);
    return out;
}

namespace detail {

/// One-sided Jacobi on a tall matrix (m >= n). On return the columns of w are
/// mutually orthogonal; v accumulates the right rotations (n x n orthogonal).
/// Throws NumericalError if the sweep limit is exhausted.
inline void one_sided_jacobi(Matrix& w, Matrix& v) {
    const std::size_t m = w.rows();
    const std::size_t n = w.cols();
    v = identity(n);
    if (n < 2) return;

    constexpr double kTol = 1.0e-15;
    constexpr std::size_t kMaxSweeps = 100;

    for (std::size_t sweep = 0; sweep < kMaxSweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                double aii = 0.0, ajj = 0.0, aij = 0.0;
                for (std::size_t r = 0; r < m; ++r) {
                    const double wi = w(r, i);
                    const double wj = w(r, j);
                    aii += wi * wi;
                    ajj += wj * wj;
                    aij += wi * wj;
                }
                if (aii == 0.0 || ajj == 0.0) continue;
                if (std::abs(aij) <= kTol * std::sqrt(aii * ajj)) continue;
                rotated = true;

                const double zeta = (ajj - aii) / (2.0 * aij);
                const double sign = zeta >= 0.0 ? 1.0 : -1.0;
                const double t = sign / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;

                for (std::size_t r = 0; r < m; ++r) {
                    const double wi = w(r, i);
                    const double wj = w(r, j);
                    w(r, i) = c * wi - s * wj;
                    w(r, j) = s * wi + c * wj;
                }
                for (std::size_t r = 0; r < n; ++r) {
                    const double vi = v(r, i);
                    const double vj = v(r, j);
                    v(r, i) = c * vi - s * vj;
                    v(r, j) = s * vi + c * vj;
                }
            }
        }
        if (!rotated) return;
    }
    throw NumericalError("svd_full: Jacobi sweeps did not converge within bound");
}

/// Replaces numerically-zero columns of u with deterministic orthonormal
/// completions so u keeps orthonormal columns even for rank-deficient input.
inline void complete_orthonormal_columns(Matrix& u, const std::vector<bool>& needs_fill) {
    const std::size_t m = u.rows();
    const std::size_t k = u.cols();
    for (std::size_t j = 0; j < k; ++j) {
        if (!needs_fill[j]) continue;
        bool placed = false;
        for (std::size_t basis = 0; basis < m && !placed; ++basis) {
            std::vector<double> cand(m, 0.0);
            cand[basis] = 1.0;
            // two Gram-Schmidt passes against every other column
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t c = 0; c < k; ++c) {
                    if (c == j || (needs_fill[c] && c > j)) continue;
                    double dot = 0.0;
                    for (std::size_t r = 0; r < m; ++r) dot += cand[r] * u(r, c);
                    for (std::size_t r = 0; r < m; ++r) cand[r] -= dot * u(r, c);
                }
            }
            double norm = 0.0;
            for (double x : cand) norm += x * x;
            norm = std::sqrt(norm);
            if (norm > 0.5) {
                for (std::size_t r = 0; r < m; ++r) u(r, j) = cand[r] / norm;
                placed = true;
            }
        }
        if (!placed) throw NumericalError("svd_full: failed to complete orthonormal basis");
    }
}

/// SVD of a tall matrix via one-sided Jacobi; returns thin factors with
/// descending values, completed U, and the largest-entry-positive convention.
inline SvdResult svd_tall(const Matrix& a) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    Matrix w = a;
    Matrix v;
    one_sided_jacobi(w, v);

    std::vector<double> sv(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double norm = 0.0;
        for (std::size_t i = 0; i < m; ++i) norm += w(i, j) * w(i, j);
        sv[j] = std::sqrt(norm);
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return sv[x] > sv[y]; });

    const double smax = sv.empty() ? 0.0 : sv[order[0]];
    const double zero_tol = smax * 2.220446049250313e-16 * static_cast<double>(std::max(m, n));

    SvdResult out;
    out.u = Matrix(m, n);
    out.v_t = Matrix(n, n);
    out.singular_values.resize(n);
    std::vector<bool> needs_fill(n, false);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        double s = sv[src];
        if (s <= zero_tol) {
            s = 0.0;
            needs_fill[j] = true;
        } else {
            const double inv = 1.0 / s;
            for (std::size_t i = 0; i < m; ++i) out.u(i, j) = w(i, src) * inv;
        }
        out.singular_values[j] = s;
        for (std::size_t c = 0; c < n; ++c) out.v_t(j, c) = v(c, src);
    }

    complete_orthonormal_columns(out.u, needs_fill);

    // Sign convention: the largest-magnitude entry of each left vector is
    // non-negative; the paired right vector flips with it.
    for (std::size_t j = 0; j < n; ++j) {
        std::size_t idx = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double mag = std::abs(out.u(i, j));
            if (mag > best) {
                best = mag;
                idx = i;
            }
        }
        if (out.u(idx, j) < 0.0) {
            for (std::size_t i = 0; i < m; ++i) out.u(i, j) = -out.u(i, j);
            for (std::size_t c = 0; c < n; ++c) out.v_t(j, c) = -out.v_t(j, c);
        }
    }
    return out;
}

} // namespace detail

/// Full (thin) SVD via one-sided Jacobi. Deterministic: identical inputs give
/// bit-identical results. Wide inputs are handled by transposition.
inline SvdResult svd_full(const Matrix& a) {
    if (a.empty()) throw ValidationError("svd_full: empty matrix");
    if (a.rows() >= a.cols()) return detail::svd_tall(a);

    SvdResult t = detail::svd_tall(transpose(a));
    SvdResult out;
    out.singular_values = std::move(t.singular_values);
    out.u = transpose(t.v_t);
    out.v_t = transpose(t.u);
    // Re-impose the convention on the swapped factors.
    const std::size_t m = out.u.rows();
    const std::size_t k = out.singular_values.size();
    const std::size_t n = out.v_t.cols();
    for (std::size_t j = 0; j < k; ++j) {
        std::size_t idx = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double mag = std::abs(out.u(i, j));
            if (mag > best) {
                best = mag;
                idx = i;
            }
        }
        if (out.u(idx, j) < 0.0) {
            for (std::size_t i = 0; i < m; ++i) out.u(i, j) = -out.u(i, j);
            for (std::size_t c = 0; c < n; ++c) out.v_t(j, c) = -out.v_t(j, c);
        }
    }
    return out;
}

} // namespace lorank
