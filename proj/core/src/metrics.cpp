#include "gossip/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gossip {

RunMetrics record(const RunOutcome& run) {
    RunMetrics m;
    m.n = run.n;
    m.steps = run.steps_used;
    m.channels_opened = run.channels_opened;
    m.packets_sent = run.packets_sent;
    m.avg_packets_per_node = run.n > 0 ? double(run.packets_sent) / double(run.n) : 0.0;
    m.max_packets_per_node = run.max_packets_per_node;
    m.completed = run.completed;
    m.step_cap_exceeded = run.step_cap_exceeded;
    m.steps_plus_one_sufficient = run.steps_plus_one_sufficient;
    m.additional_lost = run.additional_lost >= 0 ? run.additional_lost : 0;
    m.per_phase = run.phases;
    m.informed_timeline = run.timeline;
    return m;
}

namespace {

Stats stats_of(std::span<const double> xs) {
    Stats s;
    s.min = xs[0];
    s.max = xs[0];
    double sum = 0.0;
    for (double x : xs) {
        sum += x;
        s.min = std::min(s.min, x);
        s.max = std::max(s.max, x);
    }
    s.mean = sum / double(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.stddev = std::sqrt(ss / double(xs.size() - 1));
    }
    return s;
}

template <typename Get>
Stats collect(std::span<const RunMetrics> runs, Get get) {
    std::vector<double> xs;
    xs.reserve(runs.size());
    for (const RunMetrics& m : runs) xs.push_back(double(get(m)));
    return stats_of(xs);
}

} // namespace

SweepSummary summarize(std::span<const RunMetrics> runs) {
    if (runs.empty()) throw std::invalid_argument("summarize: empty run list");
    SweepSummary s;
    s.repetitions = std::uint32_t(runs.size());
    for (const RunMetrics& m : runs)
        if (m.completed) s.completed_count++;
    s.steps = collect(runs, [](const RunMetrics& m) { return m.steps; });
    s.channels_opened = collect(runs, [](const RunMetrics& m) { return m.channels_opened; });
    s.packets_sent = collect(runs, [](const RunMetrics& m) { return m.packets_sent; });
    s.avg_packets_per_node = collect(runs, [](const RunMetrics& m) { return m.avg_packets_per_node; });
    s.max_packets_per_node = collect(runs, [](const RunMetrics& m) { return m.max_packets_per_node; });
    s.additional_lost = collect(runs, [](const RunMetrics& m) { return m.additional_lost; });
    return s;
}

} // namespace gossip
