// Acceptance suite: one check per criterion, each printing a PASS/FAIL line
// with the measured values. Run a single criterion with `gossip_acceptance N`
// or everything with `gossip_acceptance all`.

#include <cmath>
#include <cstdio>
#include <cstring>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gossip/experiment.hpp"
#include "gossip/metrics.hpp"
#include "gossip/protocols.hpp"

using namespace gossip;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

Graph make_er(std::uint32_t n, std::uint64_t seed) {
    double lg = std::log2(double(n));
    return Graph::generate(GraphModel::erdos_renyi(n, lg * lg / double(n)), seed);
}

RunConfig full_cfg(std::uint32_t n) {
    RunConfig cfg;
    cfg.universe = TrackedUniverse::full(n);
    return cfg;
}

double mean_packets_per_node(Algorithm algo, std::uint32_t n, std::uint32_t seeds, std::uint64_t salt) {
    ResolvedConstants rc = resolve_constants(ProtocolConstants{}, n);
    double sum = 0;
    for (std::uint32_t i = 0; i < seeds; ++i) {
        std::uint64_t seed = derive_seed(salt, algorithm_name(algo), n, 0, i);
        Graph g = make_er(n, seed);
        RunConfig cfg = full_cfg(n);
        RunOutcome out;
        switch (algo) {
            case Algorithm::PushPull: out = run_push_pull(g, rc, seed, cfg); break;
            case Algorithm::Fast: out = run_fast_gossiping(g, rc, seed, cfg); break;
            case Algorithm::Memory: {
                NodeId leader = NodeId(Rng::stream(seed, "leader.pick").below32(n));
                out = run_memory_gossiping(g, rc, seed, cfg, leader);
                break;
            }
            default: break;
        }
        sum += double(out.packets_sent) / double(n);
    }
    return sum / double(seeds);
}

// 1. memory model: mean packets per node <= 5 at every n in 2^12..2^16
Outcome criterion1() {
    std::ostringstream detail;
    bool pass = true;
    for (std::uint32_t exp = 12; exp <= 16; ++exp) {
        std::uint32_t n = 1u << exp;
        double mean = mean_packets_per_node(Algorithm::Memory, n, 20, 1001);
        detail << "n=2^" << exp << ": " << mean << "  ";
        if (mean > 5.0) pass = false;
    }
    return {pass, "mean packets/node (memory, 20 seeds): " + detail.str() + "(bound 5.0)"};
}

// 2. ordering memory < fast < push_pull at every n, with a widening gap
Outcome criterion2() {
    std::ostringstream detail;
    bool pass = true;
    double gap_low = 0, gap_high = 0;
    for (std::uint32_t exp = 12; exp <= 16; ++exp) {
        std::uint32_t n = 1u << exp;
        double mem = mean_packets_per_node(Algorithm::Memory, n, 20, 2001);
        double fast = mean_packets_per_node(Algorithm::Fast, n, 20, 2001);
        double pp = mean_packets_per_node(Algorithm::PushPull, n, 20, 2001);
        detail << "n=2^" << exp << ": mem " << mem << " fast " << fast << " pp " << pp << "; ";
        if (!(mem < fast && fast < pp)) pass = false;
        if (exp == 12) gap_low = pp - fast;
        if (exp == 16) gap_high = pp - fast;
    }
    if (!(gap_high > gap_low)) pass = false;
    std::ostringstream gap;
    gap << "gap(pp-fast) 2^12: " << gap_low << " -> 2^16: " << gap_high;
    return {pass, detail.str() + gap.str()};
}

// 3. push-pull step concentration at n=2^12 over 50 seeds
Outcome criterion3() {
    const std::uint32_t n = 1u << 12;
    ResolvedConstants rc = resolve_constants(ProtocolConstants{}, n);
    std::uint32_t mn = 0xffffffffu, mx = 0;
    const std::uint32_t limit =
        std::uint32_t(std::ceil(std::log2(double(n)))) +
        std::uint32_t(std::ceil(std::log2(std::log2(double(n))))) + 3;
    bool under_limit = true;
    for (std::uint32_t i = 0; i < 50; ++i) {
        std::uint64_t seed = derive_seed(3001, "push_pull", n, 0, i);
        Graph g = make_er(n, seed);
        RunOutcome out = run_push_pull(g, rc, seed, full_cfg(n));
        if (!out.completed) under_limit = false;
        mn = std::min(mn, out.steps_used);
        mx = std::max(mx, out.steps_used);
        if (out.steps_used > limit) under_limit = false;
    }
    bool pass = (mx - mn <= 1) && under_limit;
    std::ostringstream d;
    d << "steps min " << mn << " max " << mx << " (spread <= 1), limit " << limit;
    return {pass, d.str()};
}

// 4. all four protocols complete in >= 99% of 100 seeded runs at n=2^12
Outcome criterion4() {
    const std::uint32_t n = 1u << 12;
    ResolvedConstants rc = resolve_constants(ProtocolConstants{}, n);
    std::map<std::string, int> completed;
    for (std::uint32_t i = 0; i < 100; ++i) {
        {
            std::uint64_t seed = derive_seed(4001, "push_pull", n, 0, i);
            Graph g = make_er(n, seed);
            if (run_push_pull(g, rc, seed, full_cfg(n)).completed) completed["push_pull"]++;
        }
        {
            std::uint64_t seed = derive_seed(4001, "fast", n, 0, i);
            Graph g = make_er(n, seed);
            if (run_fast_gossiping(g, rc, seed, full_cfg(n)).completed) completed["fast"]++;
        }
        {
            std::uint64_t seed = derive_seed(4001, "memory", n, 0, i);
            Graph g = make_er(n, seed);
            NodeId leader = NodeId(Rng::stream(seed, "leader.pick").below32(n));
            if (run_memory_gossiping(g, rc, seed, full_cfg(n), leader).completed) completed["memory"]++;
        }
        {
            std::uint64_t seed = derive_seed(4001, "leader_election", n, 0, i);
            Graph g = make_er(n, seed);
            RunOutcome out = run_leader_election(g, rc, seed, full_cfg(n));
            if (out.completed) completed["leader_election"]++;
        }
    }
    bool pass = true;
    std::ostringstream d;
    for (const auto& [name, c] : completed) {
        d << name << " " << c << "/100  ";
        if (c < 99) pass = false;
    }
    return {pass, d.str() + "(need >= 99 each)"};
}

// 5. walks started per round within +-20% of n/log2(n) in >= 95% of samples
Outcome criterion5() {
    const std::uint32_t n = 1u << 12;
    ResolvedConstants rc = resolve_constants(ProtocolConstants{}, n);
    const double expect = double(n) / std::log2(double(n));
    std::uint32_t samples = 0, within = 0;
    std::uint32_t seed_idx = 0;
    while (samples < 200) {
        std::uint64_t seed = derive_seed(5001, "fast", n, 0, seed_idx++);
        Graph g = make_er(n, seed);
        RunOutcome out = run_fast_gossiping(g, rc, seed, full_cfg(n));
        for (std::uint32_t s : out.walks_started_per_round) {
            if (samples == 200) break;
            samples++;
            if (std::abs(double(s) - expect) <= 0.2 * expect) within++;
        }
    }
    bool pass = within >= 190;
    std::ostringstream d;
    d << within << "/200 rounds within +-20% of n/log2(n)=" << expect;
    return {pass, d.str()};
}

// 6. phase-I growth: |I(t+1)| >= 1.5|I(t)| in at least half of the conditioned
//    steps for >= 95% of sampled messages (analysis-length phase I)
Outcome criterion6() {
    const std::uint32_t n = 1u << 12;
    ProtocolConstants pc;
    double lg = std::log2(double(n)), ll = std::log2(lg);
    pc.phase1_steps = std::uint32_t(std::ceil(12.0 * lg / ll));  // analysis schedule for phase I
    ResolvedConstants rc = resolve_constants(pc, n);
    std::uint32_t samples = 0, good = 0;
    for (std::uint32_t i = 0; i < 20; ++i) {
        std::uint64_t seed = derive_seed(6001, "fast", n, 0, i);
        Graph g = make_er(n, seed);
        RunConfig cfg = full_cfg(n);
        cfg.timeline = true;
        RunOutcome out = run_fast_gossiping(g, rc, seed, cfg);
        Rng pick = Rng::stream(seed, "sample.origins");
        for (int k = 0; k < 10; ++k) {
            std::uint32_t o = pick.below32(n);
            std::uint32_t conditioned = 0, grew = 0;
            for (std::uint32_t t = 1; t < rc.phase1_steps && t < out.timeline.size(); ++t) {
                double prev = double(out.timeline[t - 1][o]);
                if (prev < 20.0 || prev > double(n) / 8.0) continue;
                conditioned++;
                if (double(out.timeline[t][o]) >= 1.5 * prev) grew++;
            }
            if (conditioned == 0) continue;  // message never passed through the window
            samples++;
            if (2 * grew >= conditioned) good++;
        }
    }
    bool pass = samples > 0 && double(good) >= 0.95 * double(samples);
    std::ostringstream d;
    d << good << "/" << samples << " sampled messages grew >=1.5x in at least half their conditioned steps";
    return {pass, d.str()};
}

// 7. robustness at n=10^5 with 3 trees: additional_lost < 100 and ratio <= 2.5
Outcome criterion7() {
    const std::uint32_t n = 100000;
    ResolvedConstants rc = resolve_constants(ProtocolConstants{}, n);
    bool pass = true;
    std::ostringstream d;
    for (std::uint32_t f = 0; f <= 4000; f += 500) {
        std::int64_t worst = 0;
        double worst_ratio = 0;
        for (std::uint32_t rep = 0; rep < 5; ++rep) {
            std::uint64_t seed = derive_seed(7001, "memory_twice", n, f, rep);
            Graph g = make_er(n, seed);
            NodeId leader = NodeId(Rng::stream(seed, "leader.pick").below32(n));

            FailurePlan plan;
            RunConfig cfg;
            cfg.run_to_completion = true;
            if (f > 0) {
                plan = resolve_failure_plan(n, f, FailureInstant::BeforePhase2, seed, 0, leader);
                cfg.failure = &plan;
            }
            // tracked subset: all victims, the leader, and 10^4 healthy origins
            std::vector<NodeId> ids = plan.victims;
            ids.push_back(leader);
            std::vector<std::uint8_t> victim(n, 0);
            for (NodeId v : plan.victims) victim[v] = 1;
            Rng sample = Rng::stream(seed, "tracked.sample");
            std::vector<std::uint8_t> taken(n, 0);
            std::uint32_t got = 0;
            while (got < 10000) {
                NodeId v = sample.below32(n);
                if (victim[v] || taken[v]) continue;
                taken[v] = 1;
                ids.push_back(v);
                got++;
            }
            cfg.universe = TrackedUniverse::subset(n, std::move(ids));

            RunOutcome out = run_memory_gossiping_multi(g, rc, seed, cfg, leader, 3);
            worst = std::max(worst, out.additional_lost);
            double ratio = f > 0 ? double(out.additional_lost) / double(f) : 0.0;
            worst_ratio = std::max(worst_ratio, ratio);
        }
        d << "F=" << f << ": lost<=" << worst << " ratio<=" << worst_ratio << "; ";
        if (worst >= 100) pass = false;
        if (worst_ratio > 2.5) pass = false;
    }
    return {pass, d.str() + "(tracked healthy origins: 10^4)"};
}

// 8. engine invariant suite
Outcome criterion8() {
    std::ostringstream d;
    bool pass = true;
    auto check = [&](bool ok, const char* what) {
        d << what << (ok ? " ok; " : " FAILED; ");
        if (!ok) pass = false;
    };

    // union monotonicity + snapshot order independence on small instances
    {
        const std::uint32_t n = 12;
        Rng script(88);
        bool mono = true, orderfree = true;
        for (int rounds = 0; rounds < 20; ++rounds) {
            struct Act {
                NodeId opener, callee;
                bool pull;
            };
            std::vector<std::vector<Act>> steps;
            for (int s = 0; s < 5; ++s) {
                std::vector<Act> acts;
                for (NodeId v = 0; v < n; ++v)
                    if (script.bernoulli(0.7)) {
                        NodeId u = NodeId(script.below32(n - 1));
                        if (u >= v) u++;
                        acts.push_back({v, u, script.bernoulli(0.5)});
                    }
                steps.push_back(acts);
            }
            auto run = [&](std::uint64_t perm_seed) {
                World w(n, TrackedUniverse::full(n));
                Rng perm(perm_seed);
                std::vector<Bitset> prev;
                for (NodeId v = 0; v < n; ++v) prev.push_back(w.msgs(v));
                for (const auto& acts : steps) {
                    std::vector<std::size_t> idx(acts.size());
                    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
                    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[perm.below(i)]);
                    w.begin_step();
                    std::vector<ChannelRef> chans(acts.size());
                    for (std::size_t i : idx) chans[i] = w.open_channel(acts[i].opener, acts[i].callee, OpenKind::Uniform);
                    for (std::size_t i : idx) {
                        w.send_set(chans[i], Direction::Push, w.msgs(acts[i].opener));
                        if (acts[i].pull) w.send_set(chans[i], Direction::Pull, w.msgs(acts[i].callee));
                    }
                    w.end_step();
                    for (NodeId v = 0; v < n; ++v) {
                        if (!w.msgs(v).contains_all(prev[v])) mono = false;
                        prev[v] = w.msgs(v);
                    }
                }
                std::vector<Bitset> sets;
                for (NodeId v = 0; v < n; ++v) sets.push_back(w.msgs(v));
                return sets;
            };
            auto a = run(1), b = run(999 + rounds);
            for (NodeId v = 0; v < n; ++v)
                if (!(a[v] == b[v])) orderfree = false;
        }
        check(mono, "monotonicity");
        check(orderfree, "step-order independence");
    }

    // accounting identities and conservation via trace replay on a real run
    {
        const std::uint32_t n = 256;
        Graph g = make_er(n, 5);
        ResolvedConstants rc = resolve_constants(ProtocolConstants{}, n);
        RunConfig cfg = full_cfg(n);
        cfg.trace = true;
        RunOutcome out = run_push_pull(g, rc, 5, cfg);
        std::uint64_t phase_packets = 0, phase_channels = 0;
        for (auto& [name, acct] : out.phases) {
            phase_packets += acct.packets_sent;
            phase_channels += acct.channels_opened;
        }
        check(phase_packets == out.packets_sent && phase_channels == out.channels_opened,
              "phase accounting");
        check(out.packets_sent == out.send_events.size(), "packet/send-event identity");

        std::vector<Bitset> reach;
        for (NodeId v = 0; v < n; ++v) {
            Bitset b(n);
            b.set(v);
            reach.push_back(b);
        }
        std::uint32_t step = 0;
        std::size_t i = 0;
        while (i < out.send_events.size()) {
            std::vector<Bitset> snap = reach;
            while (i < out.send_events.size() && out.send_events[i].step == step) {
                reach[out.send_events[i].dst].or_with(snap[out.send_events[i].src]);
                i++;
            }
            step++;
        }
        bool conserved = out.completed;
        for (NodeId v = 0; v < n; ++v)
            if (reach[v].count() != n) conserved = false;  // replayed reach must agree
        check(conserved, "conservation trace replay");
    }

    // walk conservation and the moves cap (asserted inside the driver)
    {
        const std::uint32_t n = 512;
        ProtocolConstants pc;
        pc.c_moves = 0.2;
        ResolvedConstants rc = resolve_constants(pc, n);
        bool ok = true;
        try {
            Graph g = make_er(n, 12);
            RunOutcome out = run_fast_gossiping(g, rc, 12, full_cfg(n));
            if (out.walks_retired_cap == 0) ok = false;  // tight cap must retire some walks
        } catch (const std::logic_error&) {
            ok = false;
        }
        check(ok, "walk conservation + moves cap");
    }

    // determinism: byte-identical CSV for repeated identical configs
    {
        std::istringstream cfg_text(
            "[experiment]\nalgorithm = fast\nn_sweep = 512\nrepetitions = 3\nmaster_seed = 99\n");
        ExperimentConfig cfg = parse_config(cfg_text, "accept.cfg");
        cfg.p_is_fixed = true;
        cfg.p_fixed = 0.1;
        ExperimentResult r1 = run_experiment(cfg);
        ExperimentResult r2 = run_experiment(cfg);
        check(r1.runs_csv == r2.runs_csv && r1.summary_csv == r2.summary_csv, "byte-identical CSV");
    }

    return {pass, d.str()};
}

// 9. leader election at n=2^12: unique minimum-id leader known network-wide,
//    mean packets per node <= 4*log2(log2 n)
Outcome criterion9() {
    const std::uint32_t n = 1u << 12;
    ResolvedConstants rc = resolve_constants(ProtocolConstants{}, n);
    const double bound = 4.0 * std::log2(std::log2(double(n)));
    std::uint32_t ok_runs = 0;
    double packet_sum = 0;
    for (std::uint32_t i = 0; i < 100; ++i) {
        std::uint64_t seed = derive_seed(9001, "leader_election", n, 0, i);
        Graph g = make_er(n, seed);
        RunOutcome out = run_leader_election(g, rc, seed, full_cfg(n));
        packet_sum += double(out.packets_sent) / double(n);
        if (!out.completed) continue;
        // independent oracle: minimum over the candidate coin stream
        Rng coin = Rng::stream(seed, "leader.coin");
        NodeId min_candidate = kNoNode;
        for (NodeId v = 0; v < n; ++v)
            if (coin.bernoulli(rc.candidate_prob) && min_candidate == kNoNode) min_candidate = v;
        if (out.leader == min_candidate) ok_runs++;
    }
    double mean_packets = packet_sum / 100.0;
    bool pass = ok_runs >= 99 && mean_packets <= bound;
    std::ostringstream d;
    d << ok_runs << "/100 unique min-id leaders network-wide, mean packets/node " << mean_packets
      << " (bound " << bound << ")";
    return {pass, d.str()};
}

} // namespace

int main(int argc, char** argv) {
    std::vector<Outcome (*)()> criteria = {criterion1, criterion2, criterion3, criterion4, criterion5,
                                           criterion6, criterion7, criterion8, criterion9};
    int only = 0;
    if (argc > 1 && std::strcmp(argv[1], "all") != 0) only = std::atoi(argv[1]);

    bool all_pass = true;
    for (int i = 1; i <= int(criteria.size()); ++i) {
        if (only != 0 && i != only) continue;
        Outcome o = criteria[std::size_t(i - 1)]();
        std::printf("[%s] criterion %d: %s\n", o.pass ? "PASS" : "FAIL", i, o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) all_pass = false;
    }
    return all_pass ? 0 : 1;
}
