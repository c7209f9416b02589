#include "gossip/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace gossip {

namespace {

using json = nlohmann::json;

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void fail_at(const std::string& src, int line, const std::string& msg) {
    throw std::runtime_error(src + ":" + std::to_string(line) + ": " + msg);
}

std::uint64_t parse_u64(const std::string& src, int line, const std::string& v) {
    try {
        std::size_t pos = 0;
        std::uint64_t x = std::stoull(v, &pos);
        if (pos != v.size()) fail_at(src, line, "trailing characters in integer '" + v + "'");
        return x;
    } catch (const std::runtime_error&) {
        throw;
    } catch (...) {
        fail_at(src, line, "expected integer, got '" + v + "'");
    }
}

double parse_f64(const std::string& src, int line, const std::string& v) {
    try {
        std::size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) fail_at(src, line, "trailing characters in number '" + v + "'");
        return x;
    } catch (const std::runtime_error&) {
        throw;
    } catch (...) {
        fail_at(src, line, "expected number, got '" + v + "'");
    }
}

bool parse_bool(const std::string& src, int line, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail_at(src, line, "expected boolean, got '" + v + "'");
}

std::vector<std::uint32_t> parse_u32_list(const std::string& src, int line, const std::string& v) {
    std::vector<std::uint32_t> out;
    std::string token;
    std::istringstream iss(v);
    while (iss >> token) {
        if (!token.empty() && token.back() == ',') token.pop_back();
        if (token.empty()) continue;
        out.push_back(std::uint32_t(parse_u64(src, line, token)));
    }
    if (out.empty()) fail_at(src, line, "expected a non-empty list of integers");
    return out;
}

} // namespace

const char* algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::PushPull: return "push_pull";
        case Algorithm::Fast: return "fast";
        case Algorithm::Memory: return "memory";
        case Algorithm::MemoryTwice: return "memory_twice";
        case Algorithm::LeaderElection: return "leader_election";
    }
    return "?";
}

ExperimentConfig parse_config(std::istream& in, const std::string& src) {
    ExperimentConfig cfg;
    cfg.n_sweep.clear();

    std::string section;
    std::string line;
    int lineno = 0;
    bool saw_experiment = false;

    while (std::getline(in, line)) {
        lineno++;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') fail_at(src, lineno, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "experiment" && section != "graph" && section != "constants" &&
                section != "failure" && section != "modes")
                fail_at(src, lineno, "unknown section [" + section + "]");
            if (section == "experiment") saw_experiment = true;
            continue;
        }

        auto eq = line.find('=');
        if (eq == std::string::npos) fail_at(src, lineno, "expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) fail_at(src, lineno, "empty key");
        if (value.empty()) fail_at(src, lineno, "empty value for key '" + key + "'");

        if (section == "experiment") {
            if (key == "algorithm") {
                if (value == "push_pull") cfg.algorithm = Algorithm::PushPull;
                else if (value == "fast") cfg.algorithm = Algorithm::Fast;
                else if (value == "memory") cfg.algorithm = Algorithm::Memory;
                else if (value == "memory_twice") cfg.algorithm = Algorithm::MemoryTwice;
                else if (value == "leader_election") cfg.algorithm = Algorithm::LeaderElection;
                else fail_at(src, lineno, "unknown algorithm '" + value + "'");
            } else if (key == "n_sweep") {
                cfg.n_sweep = parse_u32_list(src, lineno, value);
            } else if (key == "f_sweep") {
                cfg.f_sweep = parse_u32_list(src, lineno, value);
            } else if (key == "repetitions") {
                cfg.repetitions = std::uint32_t(parse_u64(src, lineno, value));
                if (cfg.repetitions == 0) fail_at(src, lineno, "repetitions must be >= 1");
            } else if (key == "master_seed") {
                cfg.master_seed = parse_u64(src, lineno, value);
            } else {
                fail_at(src, lineno, "unknown key '" + key + "' in [experiment]");
            }
        } else if (section == "graph") {
            if (key == "model") {
                if (value == "erdos_renyi") cfg.graph_kind = GraphKind::ErdosRenyi;
                else if (value == "configuration") cfg.graph_kind = GraphKind::Configuration;
                else fail_at(src, lineno, "unknown graph model '" + value + "'");
            } else if (key == "p_mode") {
                if (value == "log2_squared_over_n") cfg.p_is_fixed = false;
                else if (value == "fixed") cfg.p_is_fixed = true;
                else fail_at(src, lineno, "unknown p_mode '" + value + "'");
            } else if (key == "p") {
                cfg.p_fixed = parse_f64(src, lineno, value);
                if (!(cfg.p_fixed > 0.0) || cfg.p_fixed > 1.0) fail_at(src, lineno, "p must be in (0,1]");
            } else if (key == "d") {
                cfg.d = std::uint32_t(parse_u64(src, lineno, value));
                if (cfg.d == 0) fail_at(src, lineno, "d must be positive");
            } else {
                fail_at(src, lineno, "unknown key '" + key + "' in [graph]");
            }
        } else if (section == "constants") {
            auto& c = cfg.constants;
            if (key == "profile") {
                if (value == "table") c.asymptotic = false;
                else if (value == "asymptotic") c.asymptotic = true;
                else fail_at(src, lineno, "unknown constants profile '" + value + "'");
            } else if (key == "ell") c.ell = parse_f64(src, lineno, value);
            else if (key == "rho") c.rho = parse_f64(src, lineno, value);
            else if (key == "c_moves") c.c_moves = parse_f64(src, lineno, value);
            else if (key == "step_cap_mult") c.step_cap_mult = parse_f64(src, lineno, value);
            else if (key == "phase1_steps") c.phase1_steps = std::uint32_t(parse_u64(src, lineno, value));
            else if (key == "phase2_rounds") c.phase2_rounds = std::uint32_t(parse_u64(src, lineno, value));
            else if (key == "phase2_walk_steps") c.phase2_walk_steps = std::uint32_t(parse_u64(src, lineno, value));
            else if (key == "phase2_bcast_steps") c.phase2_bcast_steps = std::uint32_t(parse_u64(src, lineno, value));
            else if (key == "phase3_steps") c.phase3_steps = std::uint32_t(parse_u64(src, lineno, value));
            else if (key == "memory_phase1_push_steps") {
                c.memory_phase1_push_steps = std::uint32_t(parse_u64(src, lineno, value));
                if (c.memory_phase1_push_steps % 4 != 0)
                    fail_at(src, lineno, "memory_phase1_push_steps must be a multiple of 4");
            } else if (key == "memory_phase1_pull_steps")
                c.memory_phase1_pull_steps = std::uint32_t(parse_u64(src, lineno, value));
            else if (key == "memory_phase3_steps")
                c.memory_phase3_steps = std::uint32_t(parse_u64(src, lineno, value));
            else if (key == "leader_push_steps")
                c.leader_push_steps = std::uint32_t(parse_u64(src, lineno, value));
            else if (key == "leader_pull_steps")
                c.leader_pull_steps = std::uint32_t(parse_u64(src, lineno, value));
            else
                fail_at(src, lineno, "unknown key '" + key + "' in [constants]");
        } else if (section == "failure") {
            if (key == "instant") {
                if (value == "before_phase2") cfg.instant = FailureInstant::BeforePhase2;
                else if (value == "at_step") cfg.instant = FailureInstant::AtStep;
                else if (value == "uniform_over_run") cfg.instant = FailureInstant::UniformOverRun;
                else fail_at(src, lineno, "unknown failure instant '" + value + "'");
            } else if (key == "at_step") {
                cfg.at_step = std::uint32_t(parse_u64(src, lineno, value));
            } else if (key == "exclude_leader") {
                cfg.exclude_leader = parse_bool(src, lineno, value);
            } else {
                fail_at(src, lineno, "unknown key '" + key + "' in [failure]");
            }
        } else if (section == "modes") {
            if (key == "run_to_completion") cfg.run_to_completion = parse_bool(src, lineno, value);
            else if (key == "tracked_subset_size") cfg.tracked_subset_size = std::uint32_t(parse_u64(src, lineno, value));
            else if (key == "tree_count") {
                cfg.tree_count = std::uint32_t(parse_u64(src, lineno, value));
                if (cfg.tree_count == 0) fail_at(src, lineno, "tree_count must be >= 1");
            } else if (key == "trace") cfg.trace = parse_bool(src, lineno, value);
            else if (key == "timeline") cfg.timeline = parse_bool(src, lineno, value);
            else if (key == "elect_leader") cfg.elect_leader = parse_bool(src, lineno, value);
            else fail_at(src, lineno, "unknown key '" + key + "' in [modes]");
        } else {
            fail_at(src, lineno, "key '" + key + "' outside any section");
        }
    }

    if (!saw_experiment) throw std::runtime_error(src + ": missing [experiment] section");
    if (cfg.n_sweep.empty()) throw std::runtime_error(src + ": n_sweep must be set and non-empty");
    for (std::uint32_t n : cfg.n_sweep)
        if (n == 0) throw std::runtime_error(src + ": n_sweep entries must be positive");
    for (std::uint32_t f : cfg.f_sweep)
        for (std::uint32_t n : cfg.n_sweep)
            if (f > n) throw std::runtime_error(src + ": F=" + std::to_string(f) + " exceeds n=" + std::to_string(n));
    for (std::uint32_t n : cfg.n_sweep)
        if (n > 65536 && cfg.tracked_subset_size == 0)
            throw std::runtime_error(src + ": full-bitset mode refused above n=65536; set tracked_subset_size");
    if (cfg.graph_kind == GraphKind::Configuration)
        for (std::uint32_t n : cfg.n_sweep)
            if ((std::uint64_t(cfg.d) * n) % 2 != 0)
                throw std::runtime_error(src + ": d*n must be even for the configuration model");
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    return parse_config(in, path);
}

double resolve_p(const ExperimentConfig& cfg, std::uint32_t n) {
    if (cfg.p_is_fixed) return cfg.p_fixed;
    double lg = n > 1 ? std::log2(double(n)) : 1.0;
    return std::min(1.0, lg * lg / double(n));
}

std::string echo_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "[experiment]\n";
    out << "algorithm = " << algorithm_name(cfg.algorithm) << "\n";
    out << "n_sweep =";
    for (auto n : cfg.n_sweep) out << ' ' << n;
    out << "\nf_sweep =";
    for (auto f : cfg.f_sweep) out << ' ' << f;
    out << "\nrepetitions = " << cfg.repetitions << "\n";
    out << "master_seed = " << cfg.master_seed << "\n\n";

    out << "[graph]\n";
    out << "model = " << (cfg.graph_kind == GraphKind::ErdosRenyi ? "erdos_renyi" : "configuration") << "\n";
    if (cfg.graph_kind == GraphKind::ErdosRenyi) {
        if (cfg.p_is_fixed)
            out << "p_mode = fixed\np = " << cfg.p_fixed << "\n";
        else
            out << "p_mode = log2_squared_over_n   # p = log2(n)^2 / n\n";
    } else {
        out << "d = " << cfg.d << "\n";
    }
    out << "\n[constants]\n";
    const auto& c = cfg.constants;
    out << "profile = " << (c.asymptotic ? "asymptotic" : "table") << "\n";
    out << "ell = " << c.ell << "\nrho = " << c.rho << "\nc_moves = " << c.c_moves << "\n";
    out << "step_cap_mult = " << c.step_cap_mult << "\n";
    out << "# walk start probability = ell/log2(n) = " << c.ell << "/log2(n)\n";
    out << "# candidate probability  = log2(n)^2/n\n";

    out << "\n[failure]\n";
    out << "instant = "
        << (cfg.instant == FailureInstant::BeforePhase2    ? "before_phase2"
            : cfg.instant == FailureInstant::AtStep        ? "at_step"
                                                           : "uniform_over_run")
        << "\n";
    if (cfg.instant == FailureInstant::AtStep) out << "at_step = " << cfg.at_step << "\n";
    out << "exclude_leader = " << (cfg.exclude_leader ? "true" : "false") << "\n";

    out << "\n[modes]\n";
    out << "run_to_completion = " << (cfg.run_to_completion ? "true" : "false") << "\n";
    out << "tracked_subset_size = " << cfg.tracked_subset_size << "\n";
    out << "tree_count = " << cfg.tree_count << "\n";
    out << "trace = " << (cfg.trace ? "true" : "false") << "\n";
    out << "timeline = " << (cfg.timeline ? "true" : "false") << "\n";
    out << "elect_leader = " << (cfg.elect_leader ? "true" : "false") << "\n";

    // Resolved per-n values as comments so the echoed text stays a valid config.
    for (std::uint32_t n : cfg.n_sweep) {
        ResolvedConstants rc = resolve_constants(cfg.constants, n);
        out << "\n# resolved n=" << n << "\n";
        if (cfg.graph_kind == GraphKind::ErdosRenyi)
            out << "#   p = " << resolve_p(cfg, n) << "\n";
        out << "#   phase1_steps = " << rc.phase1_steps << "\n";
        out << "#   phase2_rounds = " << rc.phase2_rounds << "\n";
        out << "#   phase2_walk_probability = " << rc.walk_prob << " (= " << c.ell << "/log2(n))\n";
        out << "#   phase2_walk_steps = " << rc.phase2_walk_steps << "\n";
        out << "#   phase2_bcast_steps = " << rc.phase2_bcast_steps << "\n";
        out << "#   phase3_steps = " << rc.phase3_steps << "\n";
        out << "#   moves_cap = " << rc.moves_cap << "\n";
        out << "#   memory_phase1_push_steps = " << rc.memory_phase1_push_steps << "\n";
        out << "#   memory_phase1_pull_steps = " << rc.memory_phase1_pull_steps << "\n";
        out << "#   memory_phase2_steps = " << rc.memory_phase2_steps << "\n";
        out << "#   memory_phase3_steps = " << rc.memory_phase3_steps << "\n";
        out << "#   leader_push_steps = " << rc.leader_push_steps << "\n";
        out << "#   leader_pull_steps = " << rc.leader_pull_steps << "\n";
        out << "#   candidate_probability = " << rc.candidate_prob << "\n";
        out << "#   step_cap = " << rc.step_cap << "\n";
    }
    return out.str();
}

namespace {

GraphModel graph_model_for(const ExperimentConfig& cfg, std::uint32_t n) {
    if (cfg.graph_kind == GraphKind::ErdosRenyi)
        return GraphModel::erdos_renyi(n, resolve_p(cfg, n));
    return GraphModel::configuration(n, cfg.d);
}

// Tracked universe for one cell: everything in full mode; otherwise the
// victims' origins, the leader, and a uniform sample of healthy origins.
TrackedUniverse build_universe(const ExperimentConfig& cfg, std::uint32_t n, std::uint64_t cell_seed,
                               const std::vector<NodeId>& victims, NodeId leader) {
    if (cfg.tracked_subset_size == 0) return TrackedUniverse::full(n);
    std::vector<NodeId> ids = victims;
    if (leader != kNoNode) ids.push_back(leader);
    std::vector<std::uint8_t> is_victim(n, 0);
    for (NodeId v : victims) is_victim[v] = 1;
    Rng rng = Rng::stream(cell_seed, "tracked.sample");
    std::vector<std::uint8_t> taken(n, 0);
    std::uint32_t want = std::min<std::uint32_t>(cfg.tracked_subset_size, n - std::uint32_t(victims.size()));
    std::uint32_t got = 0;
    while (got < want) {
        NodeId v = rng.below32(n);
        if (is_victim[v] || taken[v]) continue;
        taken[v] = 1;
        ids.push_back(v);
        got++;
    }
    return TrackedUniverse::subset(n, std::move(ids));
}

std::uint32_t nominal_run_steps(const ExperimentConfig& cfg, const ResolvedConstants& rc) {
    switch (cfg.algorithm) {
        case Algorithm::PushPull: return rc.step_cap;
        case Algorithm::Fast:
            return rc.phase1_steps +
                   rc.phase2_rounds * (1 + rc.phase2_walk_steps + rc.phase2_bcast_steps) + rc.phase3_steps;
        case Algorithm::Memory:
        case Algorithm::MemoryTwice:
            return 2 * rc.memory_phase2_steps + rc.memory_phase3_steps + rc.memory_phase3_pull_steps;
        case Algorithm::LeaderElection:
            return 1 + rc.leader_push_steps + rc.leader_pull_steps;
    }
    return rc.step_cap;
}

} // namespace

CellResult run_cell(const ExperimentConfig& cfg, std::uint32_t n, std::uint32_t f, std::uint32_t repetition) {
    const auto t0 = std::chrono::steady_clock::now();
    CellResult cell;
    cell.n = n;
    cell.f = f;
    cell.repetition = repetition;
    cell.seed = derive_seed(cfg.master_seed, algorithm_name(cfg.algorithm), n, f, repetition);
    cell.p_or_d = cfg.graph_kind == GraphKind::ErdosRenyi ? resolve_p(cfg, n) : double(cfg.d);

    ResolvedConstants rc = resolve_constants(cfg.constants, n);
    Graph g = Graph::generate(graph_model_for(cfg, n), derive_seed(cell.seed, "graph", 0, 0, 0));

    const bool needs_leader =
        cfg.algorithm == Algorithm::Memory || cfg.algorithm == Algorithm::MemoryTwice;

    NodeId leader = kNoNode;
    RunOutcome election_outcome;
    bool election_ran = false;

    auto elect = [&](const TrackedUniverse& uni) {
        RunConfig ecfg;
        ecfg.universe = uni;
        ecfg.trace = false;
        ecfg.timeline = false;
        for (std::uint32_t attempt = 0; attempt < 4; ++attempt) {
            std::uint64_t eseed = derive_seed(cell.seed, "election", attempt, 0, 0);
            election_outcome = run_leader_election(g, rc, eseed, ecfg);
            if (!election_outcome.no_candidate) break;
            cell.election_retries++;
        }
        election_ran = true;
        return election_outcome.leader;
    };

    if (needs_leader) {
        if (cfg.elect_leader) {
            TrackedUniverse uni = cfg.tracked_subset_size == 0 ? TrackedUniverse::full(n)
                                                               : TrackedUniverse::subset(n, {});
            leader = elect(uni);
            if (leader == kNoNode) {
                // Electoral failure: report the cell as incomplete.
                cell.metrics = record(election_outcome);
                cell.leader = kNoNode;
                cell.wallclock_ms = std::uint64_t(
                    std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count());
                return cell;
            }
        } else {
            leader = NodeId(Rng::stream(cell.seed, "leader.pick").below32(n));
        }
    }
    cell.leader = leader;

    FailurePlan plan;
    const FailurePlan* plan_ptr = nullptr;
    if (f > 0) {
        std::optional<NodeId> exclude;
        if (cfg.exclude_leader && leader != kNoNode) exclude = leader;
        plan = resolve_failure_plan(n, f, cfg.instant, cell.seed, cfg.at_step, exclude,
                                    nominal_run_steps(cfg, rc));
        plan_ptr = &plan;
        cell.victims = plan.victims;
    }

    RunConfig rcfg;
    rcfg.universe = build_universe(cfg, n, cell.seed, plan.victims, leader);
    rcfg.run_to_completion = cfg.run_to_completion;
    rcfg.trace = cfg.trace;
    rcfg.timeline = cfg.timeline;
    rcfg.failure = plan_ptr;

    RunOutcome out;
    switch (cfg.algorithm) {
        case Algorithm::PushPull:
            out = run_push_pull(g, rc, cell.seed, rcfg);
            break;
        case Algorithm::Fast:
            out = run_fast_gossiping(g, rc, cell.seed, rcfg);
            break;
        case Algorithm::Memory:
            out = run_memory_gossiping(g, rc, cell.seed, rcfg, leader);
            break;
        case Algorithm::MemoryTwice:
            out = run_memory_gossiping_multi(g, rc, cell.seed, rcfg, leader, cfg.tree_count);
            break;
        case Algorithm::LeaderElection: {
            for (std::uint32_t attempt = 0; attempt < 4; ++attempt) {
                std::uint64_t eseed = attempt == 0 ? cell.seed : derive_seed(cell.seed, "election", attempt, 0, 0);
                out = run_leader_election(g, rc, eseed, rcfg);
                if (!out.no_candidate) break;
                cell.election_retries++;
            }
            cell.leader = out.leader;
            break;
        }
    }

    if (election_ran && election_outcome.leader != kNoNode) {
        // Leader election precedes the gossip run; its cost is part of the cell.
        out.packets_sent += election_outcome.packets_sent;
        out.channels_opened += election_outcome.channels_opened;
        out.steps_used += election_outcome.steps_used;
        out.completed = out.completed && election_outcome.completed;
        for (auto& ph : election_outcome.phases)
            out.phases.emplace_back("election." + ph.first, ph.second);
    }

    cell.metrics = record(out);
    if (cfg.trace) {
        std::string text;
        for (const TraceRecord& tr : out.trace) {
            const char* kind = tr.kind == OpenKind::Uniform ? "uniform"
                               : tr.kind == OpenKind::Avoid ? "avoid"
                                                            : "addressed";
            text += std::to_string(tr.step) + ' ' + std::to_string(tr.opener) + ' ' +
                    std::to_string(tr.callee) + ' ' + kind + ' ' + std::to_string(tr.packets) + '\n';
        }
        cell.trace_text = std::move(text);
    }
    cell.wallclock_ms = std::uint64_t(
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count());
    return cell;
}

namespace {

std::string fmt_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", x);
    return buf;
}

std::string fmt_g(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", x);
    return buf;
}

constexpr int kSchemaVersion = 1;

std::string runs_csv_header() {
    return "schema_version,algorithm,n,p_or_d,F,seed,repetition,steps,channels_opened,packets_sent,"
           "avg_packets_per_node,max_packets_per_node,completed,additional_lost\n";
}

void append_run_row(std::string& csv, const ExperimentConfig& cfg, const CellResult& c) {
    csv += std::to_string(kSchemaVersion);
    csv += ',';
    csv += algorithm_name(cfg.algorithm);
    csv += ',';
    csv += std::to_string(c.n);
    csv += ',';
    csv += fmt_g(c.p_or_d);
    csv += ',';
    csv += std::to_string(c.f);
    csv += ',';
    csv += std::to_string(c.seed);
    csv += ',';
    csv += std::to_string(c.repetition);
    csv += ',';
    csv += std::to_string(c.metrics.steps);
    csv += ',';
    csv += std::to_string(c.metrics.channels_opened);
    csv += ',';
    csv += std::to_string(c.metrics.packets_sent);
    csv += ',';
    csv += fmt_double(c.metrics.avg_packets_per_node);
    csv += ',';
    csv += std::to_string(c.metrics.max_packets_per_node);
    csv += ',';
    csv += c.metrics.completed ? "1" : "0";
    csv += ',';
    csv += std::to_string(c.metrics.additional_lost);
    csv += '\n';
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                                std::uint32_t jobs, bool emit_plotdata) {
    struct CellKey {
        std::uint32_t n, f, rep;
    };
    std::vector<CellKey> cells;
    for (std::uint32_t n : cfg.n_sweep)
        for (std::uint32_t f : cfg.f_sweep)
            for (std::uint32_t rep = 0; rep < cfg.repetitions; ++rep) cells.push_back({n, f, rep});

    ExperimentResult result;
    result.runs.resize(cells.size());

    if (jobs <= 1) {
        for (std::size_t i = 0; i < cells.size(); ++i)
            result.runs[i] = run_cell(cfg, cells[i].n, cells[i].f, cells[i].rep);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        std::uint32_t workers = std::min<std::uint32_t>(jobs, std::uint32_t(cells.size()));
        for (std::uint32_t t = 0; t < workers; ++t) {
            pool.emplace_back([&] {
                for (;;) {
                    std::size_t i = next.fetch_add(1);
                    if (i >= cells.size()) return;
                    result.runs[i] = run_cell(cfg, cells[i].n, cells[i].f, cells[i].rep);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    // runs.csv in deterministic cell order
    result.runs_csv = runs_csv_header();
    for (const CellResult& c : result.runs) append_run_row(result.runs_csv, cfg, c);

    // summary.csv: one row per (n, F) cell group
    std::string summary =
        "schema_version,algorithm,n,p_or_d,F,repetitions,completed_count,"
        "steps_mean,steps_stddev,steps_min,steps_max,"
        "packets_mean,packets_stddev,avg_packets_per_node_mean,avg_packets_per_node_stddev,"
        "additional_lost_mean,additional_lost_max\n";
    for (std::uint32_t n : cfg.n_sweep) {
        for (std::uint32_t f : cfg.f_sweep) {
            std::vector<RunMetrics> group;
            double p_or_d = 0.0;
            for (const CellResult& c : result.runs)
                if (c.n == n && c.f == f) {
                    group.push_back(c.metrics);
                    p_or_d = c.p_or_d;
                }
            SweepSummary s = summarize(group);
            summary += std::to_string(kSchemaVersion);
            summary += ',';
            summary += algorithm_name(cfg.algorithm);
            summary += ',' + std::to_string(n) + ',' + fmt_g(p_or_d) + ',' + std::to_string(f) + ',';
            summary += std::to_string(s.repetitions) + ',' + std::to_string(s.completed_count) + ',';
            summary += fmt_double(s.steps.mean) + ',' + fmt_double(s.steps.stddev) + ',';
            summary += fmt_g(s.steps.min) + ',' + fmt_g(s.steps.max) + ',';
            summary += fmt_double(s.packets_sent.mean) + ',' + fmt_double(s.packets_sent.stddev) + ',';
            summary += fmt_double(s.avg_packets_per_node.mean) + ',' + fmt_double(s.avg_packets_per_node.stddev) + ',';
            summary += fmt_double(s.additional_lost.mean) + ',' + fmt_g(s.additional_lost.max) + '\n';
        }
    }
    result.summary_csv = summary;

    if (!out_dir.empty()) {
        namespace fs = std::filesystem;
        fs::create_directories(out_dir);
        std::ofstream(fs::path(out_dir) / "runs.csv") << result.runs_csv;
        std::ofstream(fs::path(out_dir) / "summary.csv") << result.summary_csv;

        if (cfg.trace) {
            for (const CellResult& c : result.runs) {
                std::string name = std::string("trace_") + algorithm_name(cfg.algorithm) + "_n" +
                                   std::to_string(c.n) + "_f" + std::to_string(c.f) + "_r" +
                                   std::to_string(c.repetition) + ".txt";
                std::ofstream(fs::path(out_dir) / name) << c.trace_text;
            }
        }

        std::ofstream jsonl(fs::path(out_dir) / "runs.jsonl");
        for (const CellResult& c : result.runs) {
            json j;
            j["schema_version"] = kSchemaVersion;
            j["algorithm"] = algorithm_name(cfg.algorithm);
            j["n"] = c.n;
            j["p_or_d"] = c.p_or_d;
            j["F"] = c.f;
            j["seed"] = c.seed;
            j["repetition"] = c.repetition;
            j["steps"] = c.metrics.steps;
            j["channels_opened"] = c.metrics.channels_opened;
            j["packets_sent"] = c.metrics.packets_sent;
            j["avg_packets_per_node"] = c.metrics.avg_packets_per_node;
            j["max_packets_per_node"] = c.metrics.max_packets_per_node;
            j["completed"] = c.metrics.completed;
            j["step_cap_exceeded"] = c.metrics.step_cap_exceeded;
            j["steps_plus_one_sufficient"] = c.metrics.steps_plus_one_sufficient;
            j["additional_lost"] = c.metrics.additional_lost;
            j["wallclock_ms"] = c.wallclock_ms;
            if (c.leader != kNoNode) j["leader"] = c.leader;
            j["election_retries"] = c.election_retries;
            if (!c.victims.empty()) j["victims"] = c.victims;
            json phases = json::object();
            for (const auto& [name, acct] : c.metrics.per_phase) {
                phases[name] = {{"steps", acct.steps},
                                {"channels_opened", acct.channels_opened},
                                {"packets_sent", acct.packets_sent}};
            }
            j["phases"] = phases;
            jsonl << j.dump() << '\n';
        }

        if (emit_plotdata) {
            // messages per node vs n
            std::ofstream cmp(fs::path(out_dir) / "plot_comparison.csv");
            cmp << "algorithm,n,F,avg_packets_per_node_mean\n";
            for (std::uint32_t n : cfg.n_sweep)
                for (std::uint32_t f : cfg.f_sweep) {
                    std::vector<RunMetrics> group;
                    for (const CellResult& c : result.runs)
                        if (c.n == n && c.f == f) group.push_back(c.metrics);
                    SweepSummary s = summarize(group);
                    cmp << algorithm_name(cfg.algorithm) << ',' << n << ',' << f << ','
                        << fmt_double(s.avg_packets_per_node.mean) << '\n';
                }

            // additional_lost / F vs F, plus exceedance percentages
            std::ofstream rob(fs::path(out_dir) / "plot_robustness.csv");
            rob << "n,F,ratio_mean,ratio_max\n";
            std::ofstream exc(fs::path(out_dir) / "plot_exceedance.csv");
            exc << "n,F,T,percent_runs_exceeding\n";
            const int thresholds[3] = {0, 10, 100};
            for (std::uint32_t n : cfg.n_sweep)
                for (std::uint32_t f : cfg.f_sweep) {
                    std::vector<double> ratios;
                    std::vector<std::int64_t> losses;
                    for (const CellResult& c : result.runs)
                        if (c.n == n && c.f == f) {
                            losses.push_back(c.metrics.additional_lost);
                            ratios.push_back(f > 0 ? double(c.metrics.additional_lost) / double(f) : 0.0);
                        }
                    double rsum = 0.0, rmax = 0.0;
                    for (double r : ratios) {
                        rsum += r;
                        rmax = std::max(rmax, r);
                    }
                    rob << n << ',' << f << ',' << fmt_double(ratios.empty() ? 0.0 : rsum / ratios.size())
                        << ',' << fmt_double(rmax) << '\n';
                    for (int T : thresholds) {
                        std::size_t over = 0;
                        for (std::int64_t l : losses)
                            if (l > T) over++;
                        exc << n << ',' << f << ',' << T << ','
                            << fmt_double(losses.empty() ? 0.0 : 100.0 * double(over) / double(losses.size()))
                            << '\n';
                    }
                }
        }
    }
    return result;
}

} // namespace gossip
