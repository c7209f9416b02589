#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gossip/engine.hpp"
#include "gossip/failure.hpp"
#include "gossip/graph.hpp"

namespace gossip {

// Tunable coefficients and step counts. Zero-valued step fields are resolved
// from the tuned defaults (the empirically calibrated schedule); the
// asymptotic profile switches to the analysis-style schedule instead.
struct ProtocolConstants {
    double ell = 1.0;      // walk-start coefficient: start probability ell/log2 n
    double rho = 0.75;     // long-step tail coefficient
    double c_moves = 1.0;  // walk move cap: c_moves * log2 n
    double step_cap_mult = 10.0;
    bool asymptotic = false;

    // fast gossiping (0 = derive)
    std::uint32_t phase1_steps = 0;
    std::uint32_t phase2_rounds = 0;
    std::uint32_t phase2_walk_steps = 0;
    std::uint32_t phase2_bcast_steps = 0;
    std::uint32_t phase3_steps = 0;
    // memory gossiping
    std::uint32_t memory_phase1_push_steps = 0;  // must be a multiple of 4
    std::uint32_t memory_phase1_pull_steps = 0;
    std::uint32_t memory_phase3_steps = 0;
    // leader election
    std::uint32_t leader_push_steps = 0;
    std::uint32_t leader_pull_steps = 0;
};

struct ResolvedConstants {
    std::uint32_t n = 0;
    double log2n = 0.0;
    double loglog = 1.0;

    std::uint32_t phase1_steps = 0;
    std::uint32_t phase2_rounds = 0;
    std::uint32_t phase2_walk_steps = 0;
    std::uint32_t phase2_bcast_steps = 0;
    std::uint32_t phase3_steps = 0;
    double walk_prob = 0.0;
    std::uint32_t moves_cap = 1;

    std::uint32_t memory_phase1_push_steps = 0;
    std::uint32_t memory_phase1_pull_steps = 0;
    std::uint32_t memory_phase2_steps = 0;
    std::uint32_t memory_phase3_steps = 0;
    std::uint32_t memory_phase3_pull_steps = 0;

    std::uint32_t leader_push_steps = 0;
    std::uint32_t leader_pull_steps = 0;
    double candidate_prob = 0.0;

    std::uint32_t step_cap = 1;
};

ResolvedConstants resolve_constants(const ProtocolConstants& c, std::uint32_t n);

struct RunConfig {
    TrackedUniverse universe;
    bool run_to_completion = true;
    bool trace = false;
    bool timeline = false;
    const FailurePlan* failure = nullptr;
};

struct RunOutcome {
    std::uint32_t n = 0;
    bool completed = false;
    bool step_cap_exceeded = false;
    bool no_candidate = false;
    bool steps_plus_one_sufficient = false;
    bool channel_bound_ok = true;
    std::uint32_t steps_used = 0;
    NodeId leader = kNoNode;
    std::uint64_t channels_opened = 0;
    std::uint64_t packets_sent = 0;
    std::uint64_t max_packets_per_node = 0;
    std::int64_t additional_lost = -1;  // >= 0 only for multi-tree failure runs

    Bitset gathered_at_leader;  // memory model: leader's set after Phase II

    std::vector<std::pair<std::string, PhaseAccount>> phases;
    std::vector<std::vector<std::uint32_t>> timeline;
    std::vector<TraceRecord> trace;
    std::vector<SendEvent> send_events;

    std::vector<std::uint32_t> walks_started_per_round;
    std::uint64_t walks_retired_cap = 0;
    std::uint64_t walks_lost_to_failed = 0;
};

// Simple baseline: every node opens a uniform channel and pushpulls its full
// message set each step, until gossiping completes or the step cap is hit.
RunOutcome run_push_pull(Graph& g, const ResolvedConstants& rc, std::uint64_t seed, const RunConfig& cfg);

// Distribution phase, random-walk rounds with queue forwarding and activation
// broadcasts, then a push-pull tail.
RunOutcome run_fast_gossiping(Graph& g, const ResolvedConstants& rc, std::uint64_t seed, const RunConfig& cfg);

// Candidates self-select with probability log2^2(n)/n and flood the minimum
// known identifier; a final pull round spreads it to stragglers.
RunOutcome run_leader_election(Graph& g, const ResolvedConstants& rc, std::uint64_t seed, const RunConfig& cfg);

// Memory-model gossiping: Phase I builds a dissemination tree from the leader
// over long-steps of four open-avoid pushes plus a pull tail, Phase II replays
// the recorded links in reverse time to gather all origins at the leader,
// Phase III rebroadcasts the gathered set on the Phase-I schedule.
RunOutcome run_memory_gossiping(Graph& g, const ResolvedConstants& rc, std::uint64_t seed,
                                const RunConfig& cfg, NodeId leader);

// Independent repetitions of the memory protocol (fresh randomness, same
// failure realization); a healthy origin counts as covered when any
// repetition gathers it at the leader.
RunOutcome run_memory_gossiping_multi(Graph& g, const ResolvedConstants& rc, std::uint64_t seed,
                                      const RunConfig& cfg, NodeId leader, std::uint32_t tree_count);

} // namespace gossip
