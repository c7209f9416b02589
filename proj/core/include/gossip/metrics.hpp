#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gossip/protocols.hpp"

namespace gossip {

struct RunMetrics {
    std::uint32_t n = 0;
    std::uint32_t steps = 0;
    std::uint64_t channels_opened = 0;
    std::uint64_t packets_sent = 0;
    double avg_packets_per_node = 0.0;
    std::uint64_t max_packets_per_node = 0;
    bool completed = false;
    bool step_cap_exceeded = false;
    bool steps_plus_one_sufficient = false;
    std::int64_t additional_lost = 0;
    std::vector<std::pair<std::string, PhaseAccount>> per_phase;
    // (step, |I_o|/n) per tracked origin, timeline mode only
    std::vector<std::vector<std::uint32_t>> informed_timeline;
};

// Pure extraction, no RNG use.
RunMetrics record(const RunOutcome& run);

struct Stats {
    double mean = 0.0;
    double stddev = 0.0;
    double min = 0.0;
    double max = 0.0;
};

struct SweepSummary {
    std::uint32_t repetitions = 0;
    std::uint32_t completed_count = 0;
    Stats steps;
    Stats channels_opened;
    Stats packets_sent;
    Stats avg_packets_per_node;
    Stats max_packets_per_node;
    Stats additional_lost;
};

SweepSummary summarize(std::span<const RunMetrics> runs);

} // namespace gossip
