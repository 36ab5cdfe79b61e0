#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lorank/lora.hpp"
#include "lorank/qr.hpp"
#include "lorank/rng.hpp"
#include "lorank/schedule.hpp"
#include "lorank/squeeze.hpp"

namespace lorank {

// Desk-scale stand-in for adapter fine-tuning: fit a factor pair (a, b) to a
// synthetic target tensor by full-batch gradient descent on the squared
// Frobenius objective ||a*b - target||^2. Results here say nothing about any
// language-model metric; the module exists so rank-annealing runs end to end
// on a desk.

struct SpectrumSpec {
    std::vector<double> singular_values;
    std::uint64_t seed = 0;
};

struct SyntheticTask {
    std::string name;
    Matrix target;
    SpectrumSpec spectrum_spec;
};

enum class InitScheme {
    Standard // a Gaussian scaled by 1/sqrt(rank), b zero
};

struct TrainConfig {
    double learning_rate = 1e-2;
    std::size_t steps = 0;
    std::uint64_t seed = 42;
    InitScheme init = InitScheme::Standard;
};

struct TrainResult {
    LoraFactorPair pair;
    double final_loss = 0.0;
};

struct StageResult {
    std::size_t rank = 0;
    std::size_t steps = 0;
    double final_loss = 0.0;
    std::optional<double> squeeze_retention; // set for every stage entered via a squeeze
    double wall_time_seconds = 0.0;
};

struct AnnealResult {
    LoraFactorPair pair;
    std::vector<StageResult> stages;
};

/// Target with a known spectrum: target = U diag(s) V^T with random
/// orthonormal factors from seeded QR of Gaussian matrices. An empty spectrum
/// gives the zero matrix.
inline SyntheticTask make_task(std::size_t m, std::size_t n, std::vector<double> singular_values,
                               std::uint64_t seed, std::string name = "task") {
    const std::size_t k = singular_values.size();
    if (k > std::min(m, n)) {
        throw ValidationError("make_task: spectrum of length " + std::to_string(k) +
                              " is too long for a " + std::to_string(m) + "x" + std::to_string(n) +
                              " target");
    }
    for (std::size_t i = 0; i < k; ++i) {
        if (singular_values[i] < 0.0) throw ValidationError("make_task: negative singular value");
        if (i > 0 && singular_values[i] > singular_values[i - 1]) {
            throw ValidationError("make_task: spectrum must be descending");
        }
    }

    SyntheticTask task;
    task.name = std::move(name);
    task.spectrum_spec = {singular_values, seed};
    if (k == 0) {
        task.target = Matrix(m, n);
        return task;
    }

    Xoshiro256pp rng(seed);
    Matrix gu = gaussian_matrix(m, k, rng);
    Matrix gv = gaussian_matrix(n, k, rng);
    Matrix qu, ru, qv, rv;
    detail::householder_qr(gu, qu, ru);
    detail::householder_qr(gv, qv, rv);
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t i = 0; i < m; ++i) qu(i, j) *= singular_values[j];
    task.target = matmul_nt(qu, qv);
    return task;
}

inline double loss(const SyntheticTask& task, const LoraFactorPair& pair) {
    return squared_frobenius_norm(subtract(matmul(pair.a, pair.b), task.target));
}

struct GradientPair {
    Matrix grad_a;
    Matrix grad_b;
};

/// Analytic gradients of the Frobenius objective:
/// d/da = 2 (a b - T) b^T, d/db = 2 a^T (a b - T).
inline std::pair<double, GradientPair> loss_and_gradients(const SyntheticTask& task,
                                                          const LoraFactorPair& pair) {
    const Matrix residual = subtract(matmul(pair.a, pair.b), task.target);
    GradientPair g{matmul_nt(residual, pair.b), matmul_tn(pair.a, residual)};
    for (double& v : g.grad_a.data()) v *= 2.0;
    for (double& v : g.grad_b.data()) v *= 2.0;
    return {squared_frobenius_norm(residual), std::move(g)};
}

namespace detail {

constexpr double kDivergenceLossBound = 1.0e12;

/// Runs cfg.steps gradient steps from the given factors (in place).
/// Loss is checked before each update; exceeding the divergence bound aborts.
inline double gradient_descent(const SyntheticTask& task, LoraFactorPair& pair,
                               double learning_rate, std::size_t steps) {
    for (std::size_t step = 0; step < steps; ++step) {
        auto [current, grads] = loss_and_gradients(task, pair);
        if (current > kDivergenceLossBound) {
            throw NumericalError("train: diverged at step " + std::to_string(step) + " with loss " +
                                 std::to_string(current));
        }
        for (std::size_t i = 0; i < pair.a.size(); ++i)
            pair.a.data()[i] -= learning_rate * grads.grad_a.data()[i];
        for (std::size_t i = 0; i < pair.b.size(); ++i)
            pair.b.data()[i] -= learning_rate * grads.grad_b.data()[i];
    }
    const double final_loss = loss(task, pair);
    if (final_loss > kDivergenceLossBound) {
        throw NumericalError("train: diverged after " + std::to_string(steps) +
                             " steps with loss " + std::to_string(final_loss));
    }
    return final_loss;
}

inline void validate_train_config(const TrainConfig& cfg) {
    if (!std::isfinite(cfg.learning_rate) || cfg.learning_rate <= 0.0) {
        throw ValidationError("train: learning rate must be finite and positive");
    }
}

} // namespace detail

/// Trains a fresh pair at the given rank: a is Gaussian with standard
/// deviation 1/sqrt(rank), b starts at zero. Deterministic under the seed.
inline TrainResult train(const SyntheticTask& task, std::size_t rank, const TrainConfig& cfg) {
    detail::validate_train_config(cfg);
    const std::size_t m = task.target.rows();
    const std::size_t n = task.target.cols();
    if (rank == 0 || rank > std::min(m, n)) {
        throw ValidationError("train: rank " + std::to_string(rank) + " out of range for " +
                              std::to_string(m) + "x" + std::to_string(n));
    }

    Matrix a = gaussian_matrix(m, rank, cfg.seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(rank));
    for (double& v : a.data()) v *= scale;
    Matrix b(rank, n);

    LoraFactorPair pair(task.name, std::move(a), std::move(b));
    const double final_loss = detail::gradient_descent(task, pair, cfg.learning_rate, cfg.steps);
    return {std::move(pair), final_loss};
}

/// Rank-annealed training: trains at the first stage's rank, then repeatedly
/// squeezes (factor-space route, exact core SVD) to the next stage's rank and
/// continues training. The trajectory has one entry per stage.
inline AnnealResult run_annealed(const SyntheticTask& task, const AnnealingSchedule& schedule,
                                 const TrainConfig& cfg) {
    detail::validate_train_config(cfg);
    if (schedule.stages.empty()) throw ValidationError("run_annealed: schedule has no stages");
    const std::size_t min_dim = std::min(task.target.rows(), task.target.cols());
    for (std::size_t i = 0; i < schedule.stages.size(); ++i) {
        const auto& st = schedule.stages[i];
        if (st.rank == 0 || st.rank > min_dim) {
            throw ValidationError("run_annealed: stage rank " + std::to_string(st.rank) +
                                  " out of range");
        }
        if (i > 0 && st.rank >= schedule.stages[i - 1].rank) {
            throw ValidationError("run_annealed: stage ranks must be strictly decreasing");
        }
    }

    AnnealResult result;
    for (std::size_t i = 0; i < schedule.stages.size(); ++i) {
        const auto& st = schedule.stages[i];
        const auto t0 = std::chrono::steady_clock::now();
        StageResult stage;
        stage.rank = st.rank;
        stage.steps = st.steps;
        if (i == 0) {
            TrainConfig stage_cfg = cfg;
            stage_cfg.steps = st.steps;
            TrainResult tr = train(task, st.rank, stage_cfg);
            result.pair = std::move(tr.pair);
            stage.final_loss = tr.final_loss;
        } else {
            auto [squeezed, report] = squeeze_efficient(result.pair, st.rank);
            result.pair = std::move(squeezed);
            stage.squeeze_retention = 1.0 - report.discarded_energy;
            stage.final_loss =
                detail::gradient_descent(task, result.pair, cfg.learning_rate, st.steps);
        }
        stage.wall_time_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.stages.push_back(std::move(stage));
    }
    return result;
}

/// Central finite differences on 20 probe coordinates (10 in each factor)
/// against the analytic gradients; returns the worst relative deviation.
inline double gradient_check(const SyntheticTask& task, const LoraFactorPair& pair, double epsilon,
                             std::uint64_t probe_seed = 42) {
    if (!(epsilon > 0.0) || epsilon > 1.0e-2) {
        throw ValidationError("gradient_check: epsilon must be in (0, 1e-2]");
    }
    auto [base_loss, grads] = loss_and_gradients(task, pair);
    (void)base_loss;

    Xoshiro256pp rng(probe_seed);
    LoraFactorPair probe = pair;
    double worst = 0.0;

    auto probe_coordinate = [&](Matrix& mat, const Matrix& grad) {
        const std::size_t i = rng.next_u64() % mat.rows();
        const std::size_t j = rng.next_u64() % mat.cols();
        const double saved = mat(i, j);
        mat(i, j) = saved + epsilon;
        const double plus = loss(task, probe);
        mat(i, j) = saved - epsilon;
        const double minus = loss(task, probe);
        mat(i, j) = saved;
        const double fd = (plus - minus) / (2.0 * epsilon);
        const double analytic = grad(i, j);
        const double denom = std::max({std::abs(fd), std::abs(analytic), 1.0e-8});
        worst = std::max(worst, std::abs(fd - analytic) / denom);
    };

    for (int k = 0; k < 10; ++k) probe_coordinate(probe.a, grads.grad_a);
    for (int k = 0; k < 10; ++k) probe_coordinate(probe.b, grads.grad_b);
    return worst;
}

} // namespace lorank
