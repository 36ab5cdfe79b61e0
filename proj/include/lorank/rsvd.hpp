#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "lorank/matrix.hpp"
#include "lorank/qr.hpp"
#include "lorank/rng.hpp"
#include "lorank/svd.hpp"

namespace lorank {

/// Randomized-SVD knobs. The defaults (10 oversampling dimensions, two
/// subspace iterations) are the reference configuration.
struct RsvdConfig {
    std::size_t oversampling = 10;
    std::size_t power_iterations = 2;
    std::uint64_t seed = 42;
};

/// Side-channel facts about one rsvd run.
struct RsvdInfo {
    bool sketch_clamped = false;        // rank + oversampling exceeded min(m, n)
    std::size_t sketch_size = 0;        // effective r' after clamping
    std::vector<double> sketch_spectrum; // all r' values before truncation
};

/// Randomized SVD returning the top target_rank triplets of w:
/// Gaussian sketch of width rank + oversampling, power_iterations rounds of
/// QR-reorthogonalized subspace iteration, projection D = Q^T W, exact SVD of
/// D, back-projection U = Q * U~, truncation. A zero input short-circuits to
/// all-zero factors.
inline SvdResult rsvd(const Matrix& w, std::size_t target_rank, const RsvdConfig& cfg = {},
                      RsvdInfo* info = nullptr) {
    const std::size_t m = w.rows();
    const std::size_t n = w.cols();
    const std::size_t min_dim = std::min(m, n);
    if (w.empty()) throw ValidationError("rsvd: empty matrix");
    if (target_rank == 0) throw ValidationError("rsvd: target rank must be positive");
    if (target_rank > min_dim) {
        throw ValidationError("rsvd: target rank " + std::to_string(target_rank) +
                              " exceeds min dimension " + std::to_string(min_dim));
    }

    std::size_t sketch = target_rank + cfg.oversampling;
    const bool clamped = sketch > min_dim;
    if (clamped) sketch = min_dim;
    if (info) {
        info->sketch_clamped = clamped;
        info->sketch_size = sketch;
        info->sketch_spectrum.clear();
    }

    if (frobenius_norm(w) == 0.0) {
        SvdResult zero;
        zero.u = Matrix(m, target_rank);
        zero.singular_values.assign(target_rank, 0.0);
        zero.v_t = Matrix(target_rank, n);
        if (info) info->sketch_spectrum.assign(sketch, 0.0);
        return zero;
    }

    Matrix omega = gaussian_matrix(n, sketch, cfg.seed);
    Matrix y = matmul(w, omega); // m x r'

    Matrix q, r;
    for (std::size_t it = 0; it < cfg.power_iterations; ++it) {
        detail::householder_qr(y, q, r);
        Matrix y_star = matmul_tn(w, q); // n x r'
        Matrix q_star, r_star;
        detail::householder_qr(y_star, q_star, r_star);
        y = matmul(w, q_star); // m x r'
    }
    detail::householder_qr(y, q, r);

    Matrix d = matmul_tn(q, w); // r' x n
    SvdResult core = svd_full(d);
    Matrix u_full = matmul(q, core.u); // m x r'

    if (info) info->sketch_spectrum = core.singular_values;

    SvdResult out;
    out.u = Matrix(m, target_rank);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < target_rank; ++j) out.u(i, j) = u_full(i, j);
    out.singular_values.assign(core.singular_values.begin(),
                               core.singular_values.begin() + target_rank);
    out.v_t = Matrix(target_rank, n);
    for (std::size_t i = 0; i < target_rank; ++i)
        for (std::size_t j = 0; j < n; ++j) out.v_t(i, j) = core.v_t(i, j);
    return out;
}

} // namespace lorank
