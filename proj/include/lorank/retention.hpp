#pragma once

#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lorank/lora.hpp"
#include "lorank/qr.hpp"
#include "lorank/squeeze.hpp"
#include "lorank/svd.hpp"

namespace lorank {

/// Variance/energy retention of one tensor over a grid of target ranks.
struct RetentionCurve {
    std::string tensor_name;
    std::size_t source_rank = 0;
    std::vector<std::pair<std::size_t, double>> points; // (target_rank, retention)
    std::vector<double> singular_values;                // source spectrum used
};

struct RetentionReport {
    std::vector<RetentionCurve> curves;
    std::vector<std::pair<std::size_t, double>> aggregate; // per-rank mean over tensors
    double threshold = 0.80;
    std::vector<std::size_t> flagged_ranks; // aggregate below threshold
};

/// Fraction of squared singular mass kept when truncating a descending
/// spectrum from r_src to r_tgt values. An all-zero spectrum retains 1
/// (nothing to lose); equal ranks retain exactly 1.
inline double retention(const std::vector<double>& singular_values, std::size_t r_src,
                        std::size_t r_tgt) {
    if (r_tgt > r_src) {
        throw ValidationError("retention: target rank " + std::to_string(r_tgt) +
                              " exceeds source rank " + std::to_string(r_src));
    }
    if (r_src > singular_values.size()) {
        throw ValidationError("retention: source rank " + std::to_string(r_src) +
                              " exceeds spectrum length " +
                              std::to_string(singular_values.size()));
    }
    for (std::size_t i = 0; i < r_src; ++i) {
        if (singular_values[i] < 0.0) throw ValidationError("retention: negative singular value");
        if (i > 0 && singular_values[i] > singular_values[i - 1]) {
            throw ValidationError("retention: spectrum is not sorted descending");
        }
    }
    if (r_tgt == r_src) return 1.0;
    double num = 0.0;
    for (std::size_t i = 0; i < r_tgt; ++i) num += singular_values[i] * singular_values[i];
    double den = num;
    for (std::size_t i = r_tgt; i < r_src; ++i) den += singular_values[i] * singular_values[i];
    if (den == 0.0) return 1.0;
    return num / den;
}

/// Source spectrum of a factor pair via the core-matrix route (no dense
/// delta), zero-padded to the pair's rank.
inline std::vector<double> source_spectrum(const LoraFactorPair& pair) {
    Matrix q_a, r_a, q_b, r_b;
    detail::householder_qr(pair.a, q_a, r_a);
    {
        Matrix bt = transpose(pair.b);
        detail::householder_qr(bt, q_b, r_b);
    }
    const Matrix core = matmul_nt(r_a, r_b);
    std::vector<double> spectrum = svd_full(core).singular_values;
    spectrum.resize(pair.rank, 0.0);
    return spectrum;
}

inline RetentionCurve retention_curve(const LoraFactorPair& pair,
                                      const std::vector<std::size_t>& target_ranks) {
    RetentionCurve curve;
    curve.tensor_name = pair.name;
    curve.source_rank = pair.rank;
    for (std::size_t r : target_ranks) {
        if (r == 0) throw ValidationError("retention_curve: target ranks must be positive");
        if (r > pair.rank) {
            throw ValidationError("retention_curve: target rank " + std::to_string(r) +
                                  " exceeds source rank " + std::to_string(pair.rank) +
                                  " of tensor '" + pair.name + "'");
        }
    }
    curve.singular_values = source_spectrum(pair);
    for (std::size_t r : target_ranks) {
        curve.points.emplace_back(r, retention(curve.singular_values, pair.rank, r));
    }
    return curve;
}

/// Per-rank arithmetic mean across curves sharing one grid; ranks whose mean
/// falls below the collapse threshold are flagged.
inline RetentionReport aggregate_report(std::vector<RetentionCurve> curves,
                                        double threshold = 0.80) {
    RetentionReport report;
    report.threshold = threshold;
    report.curves = std::move(curves);
    if (report.curves.empty()) return report;

    const auto& grid = report.curves.front().points;
    for (const auto& c : report.curves) {
        if (c.points.size() != grid.size()) {
            throw ValidationError("aggregate_report: curves use different target-rank grids");
        }
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (c.points[i].first != grid[i].first) {
                throw ValidationError("aggregate_report: curves use different target-rank grids");
            }
        }
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double sum = 0.0;
        for (const auto& c : report.curves) sum += c.points[i].second;
        const double mean = sum / static_cast<double>(report.curves.size());
        report.aggregate.emplace_back(grid[i].first, mean);
        if (mean < threshold) report.flagged_ranks.push_back(grid[i].first);
    }
    return report;
}

namespace detail {

inline std::string format_sig6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

} // namespace detail

/// Plot-ready table, one row per (tensor, target rank).
inline std::string retention_report_csv(const RetentionReport& report) {
    std::string out = "tensor,target_rank,retention\n";
    for (const auto& c : report.curves) {
        for (const auto& [rank, value] : c.points) {
            out += c.tensor_name;
            out += ',';
            out += std::to_string(rank);
            out += ',';
            out += detail::format_sig6(value);
            out += '\n';
        }
    }
    return out;
}

inline nlohmann::ordered_json retention_report_json(const RetentionReport& report) {
    nlohmann::ordered_json j;
    j["threshold"] = report.threshold;
    j["curves"] = nlohmann::ordered_json::array();
    for (const auto& c : report.curves) {
        nlohmann::ordered_json jc;
        jc["tensor"] = c.tensor_name;
        jc["source_rank"] = c.source_rank;
        jc["singular_values"] = c.singular_values;
        jc["points"] = nlohmann::ordered_json::array();
        for (const auto& [rank, value] : c.points) {
            jc["points"].push_back({{"target_rank", rank}, {"retention", value}});
        }
        j["curves"].push_back(std::move(jc));
    }
    j["aggregate"] = nlohmann::ordered_json::array();
    for (const auto& [rank, value] : report.aggregate) {
        j["aggregate"].push_back({{"target_rank", rank}, {"retention", value}});
    }
    j["flagged_ranks"] = report.flagged_ranks;
    return j;
}

} // namespace lorank
