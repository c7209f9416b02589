#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gossip/graph.hpp"

namespace gossip {

enum class FailureInstant : std::uint8_t { BeforePhase2, AtStep, UniformOverRun };

// Uniform random non-malicious node failures: a failed node does not store
// incoming messages and refuses to transmit. Victim selection is a
// deterministic function of (seed, n, F).
struct FailurePlan {
    std::uint32_t count = 0;
    FailureInstant instant = FailureInstant::BeforePhase2;
    std::uint32_t at_step = 0;
    std::vector<NodeId> victims;
    std::vector<std::uint32_t> victim_steps;  // UniformOverRun: per-victim failure step
};

FailurePlan resolve_failure_plan(std::uint32_t n, std::uint32_t f, FailureInstant instant,
                                 std::uint64_t seed, std::uint32_t at_step = 0,
                                 std::optional<NodeId> exclude = std::nullopt,
                                 std::uint32_t nominal_run_steps = 0);

} // namespace gossip
