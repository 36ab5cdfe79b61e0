#pragma once

#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lorank/errors.hpp"

namespace lorank {

enum class Scheme { Standard, MinSteps, ContSqueeze };

inline std::string scheme_name(Scheme s) {
    switch (s) {
    case Scheme::Standard: return "standard";
    case Scheme::MinSteps: return "min-steps";
    case Scheme::ContSqueeze: return "cont-squeeze";
    }
    return "standard";
}

struct Stage {
    std::size_t rank = 0;
    std::size_t steps = 0;
};

/// Rank-annealing plan: strictly decreasing ranks whose step budgets sum to
/// total_steps exactly.
struct AnnealingSchedule {
    Scheme scheme = Scheme::Standard;
    std::vector<Stage> stages;
    std::size_t total_steps = 0;
    std::size_t min_steps = 0;              // MinSteps parameter, possibly degraded
    bool warning = false;                   // set when the minimum had to be degraded
    std::optional<std::size_t> source_rank; // ContSqueeze: rank squeezed from
};

/// Halving ladder from start_rank down to end_rank inclusive. Non-powers of
/// two halve with ceiling division; if that overshoots past end_rank, the end
/// rank is appended instead.
inline std::vector<std::size_t> rank_ladder(std::size_t start_rank, std::size_t end_rank) {
    if (end_rank == 0) throw ValidationError("rank_ladder: end rank must be positive");
    if (end_rank > start_rank) {
        throw ValidationError("rank_ladder: end rank " + std::to_string(end_rank) +
                              " exceeds start rank " + std::to_string(start_rank));
    }
    std::vector<std::size_t> ladder{start_rank};
    std::size_t v = start_rank;
    while (v > end_rank) {
        v = (v + 1) / 2;
        ladder.push_back(v > end_rank ? v : end_rank);
        if (v <= end_rank) break;
    }
    return ladder;
}

namespace detail {

inline void validate_ladder(const std::vector<std::size_t>& ladder) {
    if (ladder.empty()) throw ValidationError("schedule: ladder is empty");
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        if (ladder[i] == 0) throw ValidationError("schedule: ranks must be positive");
        if (i > 0 && ladder[i] >= ladder[i - 1]) {
            throw ValidationError("schedule: ladder ranks must be strictly decreasing");
        }
    }
}

/// Floor-proportional split of budget by rank weight; leftover steps go one
/// each to the highest-rank stages. Conserves the budget exactly.
inline std::vector<std::size_t> allocate_proportional(const std::vector<std::size_t>& ladder,
                                                      std::size_t budget) {
    const std::size_t weight_sum = std::accumulate(ladder.begin(), ladder.end(), std::size_t{0});
    std::vector<std::size_t> steps(ladder.size(), 0);
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        steps[i] = budget * ladder[i] / weight_sum;
        assigned += steps[i];
    }
    std::size_t remainder = budget - assigned;
    for (std::size_t i = 0; remainder > 0 && i < steps.size(); ++i, --remainder) steps[i] += 1;
    return steps;
}

} // namespace detail

/// Standard scheme: the budget is split proportionally to the rank values.
inline AnnealingSchedule plan_standard(const std::vector<std::size_t>& ladder,
                                       std::size_t total_steps) {
    detail::validate_ladder(ladder);
    if (total_steps < ladder.size()) {
        throw ValidationError("plan_standard: budget " + std::to_string(total_steps) +
                              " is below the stage count " + std::to_string(ladder.size()));
    }
    AnnealingSchedule plan;
    plan.scheme = Scheme::Standard;
    plan.total_steps = total_steps;
    const auto steps = detail::allocate_proportional(ladder, total_steps);
    for (std::size_t i = 0; i < ladder.size(); ++i) plan.stages.push_back({ladder[i], steps[i]});
    return plan;
}

/// Minimum-steps scheme: every stage is reserved min_steps first and the rest
/// is split proportionally. If the budget cannot cover the reservations the
/// minimum degrades to floor(total / stages) and the warning flag is set.
inline AnnealingSchedule plan_min_steps(const std::vector<std::size_t>& ladder,
                                        std::size_t total_steps, std::size_t min_steps = 200) {
    detail::validate_ladder(ladder);
    if (total_steps < ladder.size()) {
        throw ValidationError("plan_min_steps: budget " + std::to_string(total_steps) +
                              " is below the stage count " + std::to_string(ladder.size()));
    }
    AnnealingSchedule plan;
    plan.scheme = Scheme::MinSteps;
    plan.total_steps = total_steps;

    std::size_t base = min_steps;
    if (total_steps < min_steps * ladder.size()) {
        base = total_steps / ladder.size();
        plan.warning = true;
    }
    plan.min_steps = base;

    const auto extra = detail::allocate_proportional(ladder, total_steps - base * ladder.size());
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        plan.stages.push_back({ladder[i], base + extra[i]});
    }
    return plan;
}

/// Single-stage continuation plan: extra_steps of training at target_rank
/// after squeezing down from source_rank.
inline AnnealingSchedule plan_cont_squeeze(std::size_t source_rank, std::size_t target_rank,
                                           std::size_t extra_steps) {
    if (source_rank == 0 || target_rank == 0) {
        throw ValidationError("plan_cont_squeeze: ranks must be positive");
    }
    AnnealingSchedule plan;
    plan.scheme = Scheme::ContSqueeze;
    plan.total_steps = extra_steps;
    plan.stages.push_back({target_rank, extra_steps});
    plan.source_rank = source_rank;
    return plan;
}

inline nlohmann::ordered_json schedule_to_json(const AnnealingSchedule& plan) {
    nlohmann::ordered_json j;
    j["scheme"] = scheme_name(plan.scheme);
    j["total_steps"] = plan.total_steps;
    j["warning"] = plan.warning;
    if (plan.scheme == Scheme::MinSteps) j["min_steps"] = plan.min_steps;
    if (plan.source_rank) j["source_rank"] = *plan.source_rank;
    j["stages"] = nlohmann::ordered_json::array();
    for (const auto& st : plan.stages) {
        j["stages"].push_back({{"rank", st.rank}, {"steps", st.steps}});
    }
    return j;
}

inline AnnealingSchedule schedule_from_json(const nlohmann::json& j) {
    AnnealingSchedule plan;
    try {
        const std::string scheme = j.value("scheme", "standard");
        if (scheme == "standard") {
            plan.scheme = Scheme::Standard;
        } else if (scheme == "min-steps") {
            plan.scheme = Scheme::MinSteps;
        } else if (scheme == "cont-squeeze") {
            plan.scheme = Scheme::ContSqueeze;
        } else {
            throw ValidationError("schedule: unknown scheme '" + scheme + "'");
        }
        plan.total_steps = j.at("total_steps").get<std::size_t>();
        plan.warning = j.value("warning", false);
        plan.min_steps = j.value("min_steps", std::size_t{0});
        if (j.contains("source_rank")) plan.source_rank = j.at("source_rank").get<std::size_t>();
        for (const auto& st : j.at("stages")) {
            plan.stages.push_back({st.at("rank").get<std::size_t>(),
                                   st.at("steps").get<std::size_t>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("schedule: malformed document: ") + e.what());
    }

    std::vector<std::size_t> ladder;
    std::size_t sum = 0;
    for (const auto& st : plan.stages) {
        ladder.push_back(st.rank);
        sum += st.steps;
    }
    detail::validate_ladder(ladder);
    if (sum != plan.total_steps) {
        throw ValidationError("schedule: stage steps sum to " + std::to_string(sum) +
                              " but total_steps is " + std::to_string(plan.total_steps));
    }
    return plan;
}

} // namespace lorank
