#pragma once

#include <algorithm>
#include <chrono>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "lorank/lora.hpp"
#include "lorank/matrix.hpp"
#include "lorank/qr.hpp"
#include "lorank/rsvd.hpp"
#include "lorank/svd.hpp"

namespace lorank {

enum class CoreSvd { Full, Randomized };

struct FullSvdMethod {};

struct RsvdMethod {
    RsvdConfig config{};
};

/// Factor-space squeeze; the small core matrix is decomposed either exactly
/// or with rsvd.
struct EfficientMethod {
    CoreSvd core = CoreSvd::Full;
    RsvdConfig config{};
};

using SqueezeMethod = std::variant<FullSvdMethod, RsvdMethod, EfficientMethod>;

inline std::string method_name(const SqueezeMethod& m) {
    if (std::holds_alternative<FullSvdMethod>(m)) return "full";
    if (std::holds_alternative<RsvdMethod>(m)) return "rsvd";
    const auto& eff = std::get<EfficientMethod>(m);
    return eff.core == CoreSvd::Full ? "efficient" : "efficient-rsvd";
}

struct SqueezeFlags {
    bool sketch_clamped = false;       // rsvd sketch width hit min(m, n)
    bool zero_oversampling = false;    // rsvd ran with k_o = 0
    bool zero_power_iterations = false; // rsvd ran with k_q = 0
    bool energy_lower_bound = false;   // spectrum was partial, discarded energy underestimates
};

struct SqueezeReport {
    std::string tensor_name;
    std::size_t source_rank = 0;
    std::size_t target_rank = 0;
    std::vector<double> retained_singular_values;
    double discarded_energy = 0.0; // 1 - V_r, in [0, 1]
    double wall_time_seconds = 0.0;
    std::string method;
    SqueezeFlags flags;
};

namespace detail {

/// 1 - (leading r_tgt energy / leading r_src energy) over an available
/// (possibly partial) spectrum, clamped to [0, 1].
inline double discarded_energy(const std::vector<double>& spectrum, std::size_t r_src,
                               std::size_t r_tgt) {
    const std::size_t den_n = std::min(r_src, spectrum.size());
    const std::size_t num_n = std::min(r_tgt, spectrum.size());
    double den = 0.0;
    for (std::size_t i = 0; i < den_n; ++i) den += spectrum[i] * spectrum[i];
    if (den == 0.0) return 0.0;
    double num = 0.0;
    for (std::size_t i = 0; i < num_n; ++i) num += spectrum[i] * spectrum[i];
    return std::clamp(1.0 - num / den, 0.0, 1.0);
}

inline void fill_rsvd_flags(SqueezeFlags& flags, const RsvdConfig& cfg, const RsvdInfo& info) {
    flags.sketch_clamped = info.sketch_clamped;
    flags.zero_oversampling = cfg.oversampling == 0;
    flags.zero_power_iterations = cfg.power_iterations == 0;
    flags.energy_lower_bound = true; // rsvd sees at most r_tgt + k_o values
}

} // namespace detail

/// Dense-route squeeze: reconstructs delta = a * b, decomposes it at
/// target_rank with the chosen method (full SVD or rsvd), and splits the
/// singular values back into balanced factors. Permits target_rank above the
/// source rank (rank expansion) up to min(m, n).
inline std::pair<LoraFactorPair, SqueezeReport> squeeze_standard(const LoraFactorPair& pair,
                                                                 std::size_t target_rank,
                                                                 const SqueezeMethod& method) {
    if (std::holds_alternative<EfficientMethod>(method)) {
        throw ValidationError("squeeze_standard: use squeeze_efficient for the factor-space route");
    }
    if (target_rank == 0) throw ValidationError("squeeze_standard: target rank must be positive");
    if (target_rank > pair.min_dim()) {
        throw ValidationError("squeeze_standard: target rank " + std::to_string(target_rank) +
                              " exceeds min dimension " + std::to_string(pair.min_dim()) +
                              " of tensor '" + pair.name + "'");
    }

    const auto t0 = std::chrono::steady_clock::now();
    SqueezeReport report;
    report.tensor_name = pair.name;
    report.source_rank = pair.rank;
    report.target_rank = target_rank;
    report.method = method_name(method);

    const Matrix delta = reconstruct_delta(pair);
    SvdResult truncated;
    std::vector<double> spectrum;
    if (std::holds_alternative<FullSvdMethod>(method)) {
        SvdResult full = svd_full(delta);
        spectrum = full.singular_values;
        truncated = truncate_svd(full, target_rank);
    } else {
        const auto& cfg = std::get<RsvdMethod>(method).config;
        RsvdInfo info;
        truncated = rsvd(delta, target_rank, cfg, &info);
        spectrum = info.sketch_spectrum;
        detail::fill_rsvd_flags(report.flags, cfg, info);
    }

    report.retained_singular_values = truncated.singular_values;
    report.discarded_energy = detail::discarded_energy(spectrum, pair.rank, target_rank);

    LoraFactorPair out = split_factors(truncated, pair.name);
    report.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(out), std::move(report)};
}

/// Factor-space squeeze. Never materializes the m x n delta: orthogonalizes
/// the factor bases (QR of a and of b^T), decomposes the small core
/// interaction matrix M = R_a * R_b^T, and maps the truncated triplets back
/// through the orthonormal bases. Peak auxiliary memory is
/// O((m + n) * r_src + r_src^2). Rejects rank expansion: the core has at most
/// r_src singular values.
inline std::pair<LoraFactorPair, SqueezeReport> squeeze_efficient(const LoraFactorPair& pair,
                                                                  std::size_t target_rank,
                                                                  CoreSvd core = CoreSvd::Full,
                                                                  const RsvdConfig& cfg = {}) {
    if (target_rank == 0) throw ValidationError("squeeze_efficient: target rank must be positive");
    if (target_rank > pair.rank) {
        throw ValidationError("squeeze_efficient: target rank " + std::to_string(target_rank) +
                              " exceeds source rank " + std::to_string(pair.rank) +
                              "; the core matrix cannot expand rank, use squeeze_standard");
    }
    if (target_rank > pair.min_dim()) {
        throw ValidationError("squeeze_efficient: target rank " + std::to_string(target_rank) +
                              " exceeds min dimension " + std::to_string(pair.min_dim()) +
                              " of tensor '" + pair.name + "'");
    }

    const auto t0 = std::chrono::steady_clock::now();
    SqueezeReport report;
    report.tensor_name = pair.name;
    report.source_rank = pair.rank;
    report.target_rank = target_rank;
    report.method = core == CoreSvd::Full ? "efficient" : "efficient-rsvd";

    // Thin QR of each factor. householder_qr handles factors narrower than
    // the rank (m < r_src) with an upper-trapezoidal R, so the core shrinks
    // to min(m, r) x min(n, r).
    Matrix q_a, r_a, q_b, r_b;
    detail::householder_qr(pair.a, q_a, r_a);
    {
        Matrix bt = transpose(pair.b);
        detail::householder_qr(bt, q_b, r_b);
    }
    const Matrix core_matrix = matmul_nt(r_a, r_b); // min(m,r) x min(n,r)

    SvdResult truncated;
    std::vector<double> spectrum;
    if (core == CoreSvd::Full) {
        SvdResult full = svd_full(core_matrix);
        spectrum = full.singular_values;
        truncated = truncate_svd(full, target_rank);
    } else {
        RsvdInfo info;
        truncated = rsvd(core_matrix, target_rank, cfg, &info);
        spectrum = info.sketch_spectrum;
        detail::fill_rsvd_flags(report.flags, cfg, info);
    }

    report.retained_singular_values = truncated.singular_values;
    report.discarded_energy = detail::discarded_energy(spectrum, pair.rank, target_rank);

    const LoraFactorPair small = split_factors(truncated, pair.name);
    Matrix a_out = matmul(q_a, small.a);
    Matrix b_out = matmul_nt(small.b, q_b);
    LoraFactorPair out(pair.name, std::move(a_out), std::move(b_out));
    report.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(out), std::move(report)};
}

/// Rank expansion (target_rank >= source rank). The result carries no new
/// information: trailing singular values are numerically zero and the product
/// is preserved.
inline LoraFactorPair squeeze_expand(const LoraFactorPair& pair, std::size_t target_rank) {
    if (target_rank < pair.rank) {
        throw ValidationError("squeeze_expand: target rank " + std::to_string(target_rank) +
                              " is below source rank " + std::to_string(pair.rank));
    }
    return squeeze_standard(pair, target_rank, FullSvdMethod{}).first;
}

/// Routes a method variant to the matching backend.
inline std::pair<LoraFactorPair, SqueezeReport> squeeze_pair(const LoraFactorPair& pair,
                                                             std::size_t target_rank,
                                                             const SqueezeMethod& method) {
    if (const auto* eff = std::get_if<EfficientMethod>(&method)) {
        return squeeze_efficient(pair, target_rank, eff->core, eff->config);
    }
    return squeeze_standard(pair, target_rank, method);
}

} // namespace lorank
