#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gossip/failure.hpp"
#include "gossip/metrics.hpp"
#include "gossip/protocols.hpp"

namespace gossip {

enum class Algorithm { PushPull, Fast, Memory, MemoryTwice, LeaderElection };

const char* algorithm_name(Algorithm a);

struct ExperimentConfig {
    Algorithm algorithm = Algorithm::PushPull;

    GraphKind graph_kind = GraphKind::ErdosRenyi;
    bool p_is_fixed = false;   // default: p = log2^2(n)/n per sweep size
    double p_fixed = 0.0;
    std::uint32_t d = 20;

    std::vector<std::uint32_t> n_sweep;
    std::vector<std::uint32_t> f_sweep{0};
    std::uint32_t repetitions = 1;
    std::uint64_t master_seed = 1;

    ProtocolConstants constants;

    FailureInstant instant = FailureInstant::BeforePhase2;
    std::uint32_t at_step = 0;
    bool exclude_leader = true;

    bool run_to_completion = true;
    std::uint32_t tracked_subset_size = 0;  // 0 = full bitsets (requires n <= 65536)
    std::uint32_t tree_count = 3;
    bool trace = false;
    bool timeline = false;
    bool elect_leader = false;
};

// Parses the flat key-value config format; throws std::runtime_error with a
// line-precise message on malformed input, unknown keys, or invalid values.
ExperimentConfig parse_config(std::istream& in, const std::string& source_name = "<config>");
ExperimentConfig load_config(const std::string& path);

// Everything resolved: all constants materialized for each n in the sweep.
std::string echo_config(const ExperimentConfig& cfg);

double resolve_p(const ExperimentConfig& cfg, std::uint32_t n);

struct CellResult {
    std::uint32_t n = 0;
    std::uint32_t f = 0;
    std::uint32_t repetition = 0;
    std::uint64_t seed = 0;
    double p_or_d = 0.0;
    std::uint64_t wallclock_ms = 0;
    RunMetrics metrics;
    NodeId leader = kNoNode;
    std::vector<NodeId> victims;
    std::uint32_t election_retries = 0;
    std::string trace_text;  // trace mode: one "step opener callee kind packets" line per channel
};

struct ExperimentResult {
    std::vector<CellResult> runs;  // deterministic cell order
    std::string runs_csv;
    std::string summary_csv;
};

// Executes every (n, F, repetition) cell. `jobs` > 1 runs cells concurrently;
// output order stays deterministic. When `out_dir` is non-empty, writes
// runs.csv, summary.csv, runs.jsonl and optional plot data there.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir = "",
                                std::uint32_t jobs = 1, bool emit_plotdata = false);

// Single-cell entry point shared by the harness and the test suites.
CellResult run_cell(const ExperimentConfig& cfg, std::uint32_t n, std::uint32_t f, std::uint32_t repetition);

} // namespace gossip
