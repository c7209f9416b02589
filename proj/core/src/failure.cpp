#include "gossip/failure.hpp"

#include <stdexcept>
#include <unordered_map>

#include "gossip/rng.hpp"

namespace gossip {

FailurePlan resolve_failure_plan(std::uint32_t n, std::uint32_t f, FailureInstant instant,
                                 std::uint64_t seed, std::uint32_t at_step,
                                 std::optional<NodeId> exclude, std::uint32_t nominal_run_steps) {
    if (f > n) throw std::invalid_argument("failure: F > n");
    if (exclude && f > n - 1) throw std::invalid_argument("failure: F > n-1 with excluded leader");

    FailurePlan plan;
    plan.count = f;
    plan.instant = instant;
    plan.at_step = at_step;

    Rng rng = Rng::stream(seed, "failure.victims");
    const std::uint32_t pool = exclude ? n - 1 : n;

    // Sparse partial Fisher-Yates: uniform without replacement in O(F).
    std::unordered_map<std::uint32_t, std::uint32_t> moved;
    plan.victims.reserve(f);
    for (std::uint32_t i = 0; i < f; ++i) {
        std::uint32_t j = i + rng.below32(pool - i);
        auto ji = moved.find(j);
        std::uint32_t pick = (ji == moved.end()) ? j : ji->second;
        auto ii = moved.find(i);
        moved[j] = (ii == moved.end()) ? i : ii->second;
        NodeId v = pick;
        if (exclude && v >= *exclude) v++;  // pool skips the excluded node
        plan.victims.push_back(v);
    }

    if (instant == FailureInstant::UniformOverRun) {
        Rng step_rng = Rng::stream(seed, "failure.steps");
        std::uint32_t span = nominal_run_steps > 0 ? nominal_run_steps : 1;
        plan.victim_steps.reserve(f);
        for (std::uint32_t i = 0; i < f; ++i)
            plan.victim_steps.push_back(step_rng.below32(span));
    }
    return plan;
}

} // namespace gossip
