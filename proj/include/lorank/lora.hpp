#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "lorank/matrix.hpp"
#include "lorank/svd.hpp"

namespace lorank {

/// One adapter tensor: delta = a * b with a (m x rank) and b (rank x n).
/// The rank may exceed min(m, n) for degenerate inputs; squeeze outputs are
/// always bounded by min(m, n).
struct LoraFactorPair {
    std::string name;
    Matrix a;
    Matrix b;
    std::size_t rank = 0;

    LoraFactorPair() = default;

    LoraFactorPair(std::string name_, Matrix a_, Matrix b_)
        : name(std::move(name_)), a(std::move(a_)), b(std::move(b_)), rank(a.cols()) {
        if (a.cols() != b.rows()) {
            throw ValidationError("factor pair '" + name + "': a has " + std::to_string(a.cols()) +
                                  " columns but b has " + std::to_string(b.rows()) + " rows");
        }
    }

    std::size_t out_rows() const noexcept { return a.rows(); }
    std::size_t out_cols() const noexcept { return b.cols(); }
    std::size_t min_dim() const noexcept { return std::min(a.rows(), b.cols()); }
};

/// Dense delta = a * b (the full-space reconstruction of the adapter update).
inline Matrix reconstruct_delta(const LoraFactorPair& pair) {
    return matmul(pair.a, pair.b);
}

/// Splits a decomposition into balanced factors: a = u * sqrt(S),
/// b = sqrt(S) * v_t, so column i of a and row i of b both have norm
/// sqrt(s_i).
inline LoraFactorPair split_factors(const SvdResult& svd, std::string name = {}) {
    const std::size_t k = svd.singular_values.size();
    for (double s : svd.singular_values) {
        if (s < 0.0) throw NumericalError("split_factors: negative singular value");
    }
    Matrix a(svd.u.rows(), k);
    Matrix b(k, svd.v_t.cols());
    for (std::size_t j = 0; j < k; ++j) {
        const double root = std::sqrt(svd.singular_values[j]);
        for (std::size_t i = 0; i < svd.u.rows(); ++i) a(i, j) = svd.u(i, j) * root;
        for (std::size_t c = 0; c < svd.v_t.cols(); ++c) b(j, c) = svd.v_t(j, c) * root;
    }
    return LoraFactorPair(std::move(name), std::move(a), std::move(b));
}

} // namespace lorank
