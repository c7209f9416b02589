#include "gossip/protocols.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace gossip {

namespace {

// "Rounded to a multiple of 4": whole long-steps only, never exceeding the
// nominal step count.
std::uint32_t floor_to_multiple_of_4(double x) {
    auto m = static_cast<std::int64_t>(std::floor(x / 4.0));
    return std::uint32_t(std::max<std::int64_t>(m, 0)) * 4;
}

std::uint32_t ceil_u(double x) { return std::uint32_t(std::max(0.0, std::ceil(x))); }
std::uint32_t floor_u(double x) { return std::uint32_t(std::max(0.0, std::floor(x))); }

std::uint64_t tree_seed(std::uint64_t seed, std::uint32_t tree) {
    return derive_seed(seed, "memory.tree", tree, 0, 0);
}

// Applies a failure plan at the configured instant.
struct FailureHook {
    const FailurePlan* plan = nullptr;
    bool applied = false;
    std::vector<std::pair<std::uint32_t, NodeId>> schedule;  // UniformOverRun
    std::size_t cursor = 0;

    explicit FailureHook(const FailurePlan* p) : plan(p) {
        if (plan && plan->instant == FailureInstant::UniformOverRun) {
            schedule.reserve(plan->victims.size());
            for (std::size_t i = 0; i < plan->victims.size(); ++i)
                schedule.emplace_back(plan->victim_steps[i], plan->victims[i]);
            std::sort(schedule.begin(), schedule.end());
        }
    }

    void on_step_begin(World& w, std::uint32_t step) {
        if (!plan) return;
        if (plan->instant == FailureInstant::AtStep && !applied && step >= plan->at_step) {
            w.fail_many(plan->victims);
            applied = true;
        } else if (plan->instant == FailureInstant::UniformOverRun) {
            std::vector<NodeId> due;
            while (cursor < schedule.size() && schedule[cursor].first <= step)
                due.push_back(schedule[cursor++].second);
            if (!due.empty()) w.fail_many(due);
        }
    }

    void on_phase2_boundary(World& w) {
        if (!plan) return;
        if (plan->instant == FailureInstant::BeforePhase2 && !applied) {
            w.fail_many(plan->victims);
            applied = true;
        }
    }
};

void extract_outcome(World& w, RunOutcome& o) {
    o.n = w.num_nodes();
    o.steps_used = w.step_index();
    o.channels_opened = w.channels_opened();
    o.packets_sent = w.packets_sent();
    std::uint64_t mx = 0;
    for (std::uint32_t v = 0; v < w.num_nodes(); ++v) mx = std::max(mx, w.packets_by_node(v));
    o.max_packets_per_node = mx;
    o.completed = w.gossip_complete();
    o.phases = w.phase_accounts();
    o.timeline = w.timeline();
    o.trace = w.trace();
    o.send_events = w.send_events();
}

// One pushpull step: every alive non-isolated node opens a uniform channel;
// opener pushes its set, callee pulls its own back.
void pushpull_step(World& w, Graph& g, Rng& rng, std::vector<ChannelRef>& chans) {
    const std::uint32_t n = w.num_nodes();
    w.begin_step();
    chans.clear();
    for (NodeId v = 0; v < n; ++v) {
        if (w.failed(v)) continue;
        auto u = g.sample_neighbor(v, rng);
        if (!u) continue;
        chans.push_back(w.open_channel(v, *u, OpenKind::Uniform));
    }
    for (ChannelRef ch : chans) {
        w.send_set(ch, Direction::Push, w.msgs(w.channel_opener(ch)));
        w.send_set(ch, Direction::Pull, w.msgs(w.channel_callee(ch)));
    }
    w.end_step();
}

} // namespace

ResolvedConstants resolve_constants(const ProtocolConstants& c, std::uint32_t n) {
    ResolvedConstants rc;
    rc.n = n;
    rc.log2n = n > 1 ? std::log2(double(n)) : 0.0;
    rc.loglog = std::max(std::log2(std::max(rc.log2n, 1.0)), 1.0);
    const double lg = rc.log2n, ll = rc.loglog;

    if (!c.asymptotic) {
        rc.phase1_steps = ceil_u(1.2 * ll);
        rc.phase2_rounds = ceil_u(lg / ll);
        rc.phase2_walk_steps = ceil_u(lg / ll + 2.0);
        rc.phase2_bcast_steps = ceil_u(0.5 * ll);
        rc.phase3_steps = ceil_u(8.0 * lg / ll);
        rc.memory_phase1_push_steps = floor_to_multiple_of_4(2.0 * lg);
        rc.memory_phase1_pull_steps = floor_u(2.0 * ll);
        rc.memory_phase3_steps = floor_u(lg);
        rc.memory_phase3_pull_steps = floor_u(2.0 * ll);
    } else {
        rc.phase1_steps = ceil_u(12.0 * lg / ll);
        rc.phase2_rounds = ceil_u(4.0 * lg / ll);
        rc.phase2_walk_steps = ceil_u(6.0 * c.ell * lg);
        rc.phase2_bcast_steps = ceil_u(0.5 * ll);
        rc.phase3_steps = ceil_u(8.0 * lg / ll);
        // log4 n long-steps plus rho*loglog long-steps of four steps each
        rc.memory_phase1_push_steps = 4 * (ceil_u(lg / 2.0) + ceil_u(c.rho * ll));
        rc.memory_phase1_pull_steps = 4 * ceil_u(c.rho * ll);
        rc.memory_phase3_steps = rc.memory_phase1_push_steps;
        rc.memory_phase3_pull_steps = rc.memory_phase1_pull_steps;
    }
    rc.walk_prob = n > 1 ? std::min(1.0, c.ell / lg) : 0.0;
    rc.moves_cap = std::max<std::uint32_t>(1, ceil_u(c.c_moves * lg));
    rc.leader_push_steps = ceil_u(lg + c.rho * ll);
    rc.leader_pull_steps = ceil_u(c.rho * ll);
    rc.candidate_prob = n > 0 ? std::min(1.0, lg * lg / double(n)) : 0.0;
    rc.step_cap = std::max<std::uint32_t>(1, ceil_u(c.step_cap_mult * lg));

    if (c.phase1_steps) rc.phase1_steps = c.phase1_steps;
    if (c.phase2_rounds) rc.phase2_rounds = c.phase2_rounds;
    if (c.phase2_walk_steps) rc.phase2_walk_steps = c.phase2_walk_steps;
    if (c.phase2_bcast_steps) rc.phase2_bcast_steps = c.phase2_bcast_steps;
    if (c.phase3_steps) rc.phase3_steps = c.phase3_steps;
    if (c.memory_phase1_push_steps) {
        if (c.memory_phase1_push_steps % 4 != 0)
            throw std::invalid_argument("memory_phase1_push_steps must be a multiple of 4");
        rc.memory_phase1_push_steps = c.memory_phase1_push_steps;
    }
    if (c.memory_phase1_pull_steps) rc.memory_phase1_pull_steps = c.memory_phase1_pull_steps;
    if (c.memory_phase3_steps) rc.memory_phase3_steps = c.memory_phase3_steps;
    if (c.leader_push_steps) rc.leader_push_steps = c.leader_push_steps;
    if (c.leader_pull_steps) rc.leader_pull_steps = c.leader_pull_steps;
    rc.memory_phase2_steps = rc.memory_phase1_push_steps + rc.memory_phase1_pull_steps;
    return rc;
}

RunOutcome run_push_pull(Graph& g, const ResolvedConstants& rc, std::uint64_t seed, const RunConfig& cfg) {
    World w(g.num_nodes(), cfg.universe, {cfg.trace, cfg.timeline});
    Rng rng = Rng::stream(seed, "pushpull.main");
    FailureHook fh(cfg.failure);
    if (cfg.failure && cfg.failure->instant == FailureInstant::BeforePhase2)
        w.fail_many(cfg.failure->victims);  // no phase structure: apply up front

    RunOutcome o;
    w.set_phase("pushpull");
    std::vector<ChannelRef> chans;
    while (!w.gossip_complete()) {
        if (w.step_index() >= rc.step_cap) {
            o.step_cap_exceeded = true;
            break;
        }
        fh.on_step_begin(w, w.step_index());
        if (w.gossip_complete()) break;
        pushpull_step(w, g, rng, chans);
    }
    extract_outcome(w, o);
    const std::uint32_t nominal = ceil_u(rc.log2n) + ceil_u(rc.loglog);
    o.steps_plus_one_sufficient = o.completed && o.steps_used <= nominal + 1;
    return o;
}

RunOutcome run_fast_gossiping(Graph& g, const ResolvedConstants& rc, std::uint64_t seed, const RunConfig& cfg) {
    const std::uint32_t n = g.num_nodes();
    World w(n, cfg.universe, {cfg.trace, cfg.timeline});
    Rng rng1 = Rng::stream(seed, "fast.phase1");
    Rng rng_start = Rng::stream(seed, "fast.walkstart");
    Rng rng_walk = Rng::stream(seed, "fast.walkmove");
    Rng rng_bcast = Rng::stream(seed, "fast.broadcast");
    Rng rng3 = Rng::stream(seed, "fast.phase3");
    FailureHook fh(cfg.failure);
    RunOutcome o;

    w.set_phase("phase1");
    std::vector<ChannelRef> chans;
    for (std::uint32_t t = 0; t < rc.phase1_steps; ++t) {
        fh.on_step_begin(w, w.step_index());
        w.begin_step();
        chans.clear();
        for (NodeId v = 0; v < n; ++v) {
            if (w.failed(v)) continue;
            auto u = g.sample_neighbor(v, rng1);
            if (!u) continue;
            chans.push_back(w.open_channel(v, *u, OpenKind::Uniform));
        }
        for (ChannelRef ch : chans) w.send_set(ch, Direction::Push, w.msgs(w.channel_opener(ch)));
        w.end_step();
    }

    fh.on_phase2_boundary(w);
    w.set_phase("phase2");
    struct WalkToken {
        Bitset payload;
        std::uint32_t moves;
    };
    std::vector<std::deque<WalkToken>> queues(n);

    // Token arrivals from the previous step: absorb the payload, append the
    // combined bundle to the host queue, retire walks past the move cap.
    auto drain_arrivals = [&](std::uint64_t& retired) {
        for (NodeId v = 0; v < n; ++v) {
            auto& inbox = w.token_inbox(v);
            if (inbox.empty()) continue;
            for (auto& td : inbox) {
                if (td.moves > rc.moves_cap) {
                    retired++;
                    continue;
                }
                w.absorb(v, td.payload);
                td.payload.or_with(w.msgs(v));  // queue entry carries m' ∪ m_v
                queues[v].push_back({std::move(td.payload), td.moves});
            }
            inbox.clear();
        }
    };

    for (std::uint32_t r = 0; r < rc.phase2_rounds; ++r) {
        std::uint32_t started = 0;
        std::uint64_t retired = 0, lost = 0;

        fh.on_step_begin(w, w.step_index());
        w.begin_step();
        for (NodeId v = 0; v < n; ++v) {
            if (w.failed(v)) continue;
            if (!rng_start.bernoulli(rc.walk_prob)) continue;
            auto u = g.sample_neighbor(v, rng_walk);
            if (!u) continue;
            ChannelRef ch = w.open_channel(v, *u, OpenKind::Uniform);
            if (w.failed(*u)) lost++;
            Bitset payload = w.msgs(v);
            w.send_token(ch, Direction::Push, std::move(payload), 1);
            started++;
        }
        w.end_step();
        o.walks_started_per_round.push_back(started);

        for (std::uint32_t t = 0; t < rc.phase2_walk_steps; ++t) {
            drain_arrivals(retired);
            fh.on_step_begin(w, w.step_index());
            w.begin_step();
            for (NodeId v = 0; v < n; ++v) {
                if (w.failed(v) || queues[v].empty()) continue;
                WalkToken tok = std::move(queues[v].front());
                queues[v].pop_front();
                if (tok.moves > rc.moves_cap) throw std::logic_error("fast: over-cap token was enqueued");
                auto u = g.sample_neighbor(v, rng_walk);
                if (!u) throw std::logic_error("fast: walk hosted on isolated node");
                ChannelRef ch = w.open_channel(v, *u, OpenKind::Uniform);
                if (w.failed(*u)) lost++;
                w.send_token(ch, Direction::Push, std::move(tok.payload), tok.moves + 1);
            }
            w.end_step();
        }
        drain_arrivals(retired);

        std::uint64_t resident = 0;
        for (NodeId v = 0; v < n; ++v) resident += queues[v].size();
        if (started != resident + retired + lost)
            throw std::logic_error("fast: walk conservation violated in round " + std::to_string(r));
        o.walks_retired_cap += retired;
        o.walks_lost_to_failed += lost;

        std::vector<std::uint8_t> active(n, 0);
        for (NodeId v = 0; v < n; ++v) active[v] = !queues[v].empty();
        for (std::uint32_t b = 0; b < rc.phase2_bcast_steps; ++b) {
            fh.on_step_begin(w, w.step_index());
            w.begin_step();
            chans.clear();
            for (NodeId v = 0; v < n; ++v) {
                if (!active[v] || w.failed(v)) continue;
                auto u = g.sample_neighbor(v, rng_bcast);
                if (!u) continue;
                chans.push_back(w.open_channel(v, *u, OpenKind::Uniform));
            }
            for (ChannelRef ch : chans) w.send_set(ch, Direction::Push, w.msgs(w.channel_opener(ch)));
            w.end_step();
            for (NodeId rcv : w.last_step_receivers()) active[rcv] = 1;
        }
        for (auto& q : queues) q.clear();  // all nodes become inactive, walks discarded
    }

    w.set_phase("phase3");
    std::uint32_t phase3_used = 0;
    if (cfg.run_to_completion) {
        while (!w.gossip_complete() && phase3_used < rc.step_cap) {
            fh.on_step_begin(w, w.step_index());
            pushpull_step(w, g, rng3, chans);
            phase3_used++;
        }
        o.step_cap_exceeded = !w.gossip_complete();
    } else {
        for (std::uint32_t t = 0; t < rc.phase3_steps; ++t) {
            fh.on_step_begin(w, w.step_index());
            pushpull_step(w, g, rng3, chans);
            phase3_used++;
        }
    }
    extract_outcome(w, o);
    o.steps_plus_one_sufficient = o.completed && phase3_used <= rc.phase3_steps + 1;
    return o;
}

RunOutcome run_leader_election(Graph& g, const ResolvedConstants& rc, std::uint64_t seed, const RunConfig& cfg) {
    const std::uint32_t n = g.num_nodes();
    World w(n, cfg.universe, {cfg.trace, cfg.timeline});
    Rng rng_coin = Rng::stream(seed, "leader.coin");
    Rng rng_open = Rng::stream(seed, "leader.open");
    FailureHook fh(cfg.failure);
    RunOutcome o;

    if (n == 1) {
        o.n = 1;
        o.leader = 0;
        o.completed = true;
        return o;
    }

    std::vector<std::uint8_t> candidate(n, 0), active(n, 0);
    std::vector<NodeId> best(n, kNoNode);  // smallest identifier received so far
    std::vector<std::array<NodeId, 4>> called(n, {kNoNode, kNoNode, kNoNode, kNoNode});

    auto open_avoid = [&](NodeId v) -> std::optional<NodeId> {
        NodeId avoid[4];
        std::size_t na = 0;
        for (NodeId a : called[v])
            if (a != kNoNode) avoid[na++] = a;
        return g.sample_neighbor_avoiding(v, {avoid, na}, rng_open);
    };

    bool any_candidate = false;
    w.set_phase("announce");
    fh.on_step_begin(w, w.step_index());
    w.begin_step();
    for (NodeId v = 0; v < n; ++v) {
        bool heads = rng_coin.bernoulli(rc.candidate_prob);
        if (w.failed(v) || !heads) continue;
        candidate[v] = 1;
        active[v] = 1;
        best[v] = v;
        any_candidate = true;
        auto u = open_avoid(v);
        if (!u) continue;
        ChannelRef ch = w.open_channel(v, *u, OpenKind::Avoid);
        called[v][w.step_index() % 4] = *u;
        w.send_id(ch, Direction::Push, v);
    }
    w.end_step();

    if (!any_candidate) {
        extract_outcome(w, o);
        o.no_candidate = true;
        o.completed = false;
        return o;
    }

    auto drain_ids = [&]() {
        for (NodeId v = 0; v < n; ++v) {
            auto& inbox = w.id_inbox(v);
            if (inbox.empty()) continue;
            for (const IdDelivery& d : inbox) {
                if (best[v] == kNoNode || d.id < best[v]) best[v] = d.id;
                active[v] = 1;
            }
            inbox.clear();
        }
    };

    w.set_phase("push");
    for (std::uint32_t t = 0; t < rc.leader_push_steps; ++t) {
        drain_ids();
        fh.on_step_begin(w, w.step_index());
        w.begin_step();
        for (NodeId v = 0; v < n; ++v) {
            if (!active[v] || w.failed(v)) continue;
            auto u = open_avoid(v);
            if (!u) continue;
            ChannelRef ch = w.open_channel(v, *u, OpenKind::Avoid);
            called[v][w.step_index() % 4] = *u;
            w.send_id(ch, Direction::Push, best[v]);
        }
        w.end_step();
    }

    fh.on_phase2_boundary(w);
    w.set_phase("pull");
    std::vector<ChannelRef> chans;
    for (std::uint32_t t = 0; t < rc.leader_pull_steps; ++t) {
        drain_ids();
        fh.on_step_begin(w, w.step_index());
        w.begin_step();
        chans.clear();
        for (NodeId v = 0; v < n; ++v) {
            if (w.failed(v)) continue;
            auto u = open_avoid(v);
            if (!u) continue;
            chans.push_back(w.open_channel(v, *u, OpenKind::Avoid));
            called[v][w.step_index() % 4] = *u;
        }
        for (ChannelRef ch : chans) {
            NodeId callee = w.channel_callee(ch);
            if (best[callee] != kNoNode) w.send_id(ch, Direction::Pull, best[callee]);
        }
        w.end_step();
    }
    drain_ids();

    NodeId min_candidate = kNoNode;
    for (NodeId v = 0; v < n; ++v)
        if (candidate[v] && !w.failed(v) && (min_candidate == kNoNode || v < min_candidate)) min_candidate = v;

    std::uint32_t self_identified = 0;
    NodeId self_leader = kNoNode;
    bool network_knows = true;
    for (NodeId v = 0; v < n; ++v) {
        if (w.failed(v)) continue;
        if (candidate[v] && best[v] == v) {
            self_identified++;
            self_leader = v;
        }
        if (best[v] != min_candidate) network_knows = false;
    }

    extract_outcome(w, o);
    o.completed = (self_identified == 1 && self_leader == min_candidate && network_knows);
    if (o.completed) o.leader = self_leader;
    o.steps_plus_one_sufficient = o.completed;
    return o;
}

namespace {

// Per-node link memory for the memory model: up to four stored addresses,
// slotted by step index mod 4. Push contacts and the pull first-receipt are
// tagged with their step and replayed in Phase II; bare pull attempts only
// feed the avoid set.
constexpr std::uint32_t kNoTag = 0xffffffffu;

struct LinkSlot {
    NodeId node = kNoNode;
    std::uint32_t tag = kNoTag;
    enum Kind : std::uint8_t { None, PushContact, PullReceipt, PullAttempt } kind = None;
};

struct MemoryState {
    std::vector<std::array<LinkSlot, 4>> links;
    std::vector<std::int64_t> receipt_step;  // first receipt of the leader message, -1 if never
    std::vector<std::uint8_t> informed;

    explicit MemoryState(std::uint32_t n)
        : links(n), receipt_step(n, -1), informed(n, 0) {}
};

} // namespace

namespace {

// One Alg-3 style execution (tree build, reverse gather, rebroadcast) over a
// shared world. Multi-tree runs call the phases piecewise so that every tree
// is built before any failure strikes and the gathers run back to back on the
// accumulated message state.
struct MemoryDriver {
    Graph& g;
    World& w;
    const ResolvedConstants& rc;
    NodeId leader;
    std::uint32_t n;
    std::uint32_t leader_bit;
    Bitset leader_msg;

    MemoryDriver(Graph& graph, World& world, const ResolvedConstants& consts, NodeId lead)
        : g(graph), w(world), rc(consts), leader(lead), n(world.num_nodes()),
          leader_bit(world.universe().index_of(lead)), leader_msg(world.universe().size()) {
        if (leader_bit == TrackedUniverse::kNoIndex)
            throw std::invalid_argument("memory: leader must be a tracked origin");
        leader_msg.set(leader_bit);
    }

    static std::size_t avoid_of(const MemoryState& st, NodeId v, NodeId* buf) {
        std::size_t na = 0;
        for (const LinkSlot& s : st.links[v])
            if (s.node != kNoNode) buf[na++] = s.node;
        return na;
    }

    // Phase I: dissemination tree. A node first informed in long-step j sends
    // the leader message to four avoid-distinct neighbors in long-step j+1 and
    // records each contact with its step; a pull tail informs the rest.
    void build_tree(MemoryState& st, Rng& rng, FailureHook& fh) {
        st.informed[leader] = 1;
        const std::uint32_t P = rc.memory_phase1_push_steps;
        const std::uint32_t T = P + rc.memory_phase1_pull_steps;
        for (std::uint32_t t = 0; t < P; ++t) {
            fh.on_step_begin(w, w.step_index());
            w.begin_step();
            for (NodeId v = 0; v < n; ++v) {
                if (w.failed(v)) continue;
                bool is_active;
                if (v == leader) {
                    is_active = t < 4;
                } else if (st.informed[v]) {
                    std::uint32_t j = std::uint32_t(st.receipt_step[v]) / 4;
                    is_active = t >= 4 * (j + 1) && t < 4 * (j + 2);
                } else {
                    is_active = false;
                }
                if (!is_active) continue;
                NodeId buf[4];
                auto u = g.sample_neighbor_avoiding(v, {buf, avoid_of(st, v, buf)}, rng);
                if (!u) continue;
                ChannelRef ch = w.open_channel(v, *u, OpenKind::Avoid);
                st.links[v][t % 4] = {*u, t, LinkSlot::PushContact};
                w.send_set(ch, Direction::Push, leader_msg);
            }
            w.end_step();
            for (NodeId rcv : w.last_step_receivers())
                if (!st.informed[rcv]) {
                    st.informed[rcv] = 1;
                    st.receipt_step[rcv] = t;
                }
        }

        struct Attempt {
            ChannelRef ch;
            NodeId opener;
            NodeId callee;
        };
        std::vector<Attempt> attempts;
        for (std::uint32_t t = P; t < T; ++t) {
            fh.on_step_begin(w, w.step_index());
            w.begin_step();
            attempts.clear();
            for (NodeId v = 0; v < n; ++v) {
                if (w.failed(v) || st.informed[v]) continue;
                NodeId buf[4];
                auto u = g.sample_neighbor_avoiding(v, {buf, avoid_of(st, v, buf)}, rng);
                if (!u) continue;
                ChannelRef ch = w.open_channel(v, *u, OpenKind::Avoid);
                st.links[v][t % 4] = {*u, kNoTag, LinkSlot::PullAttempt};
                attempts.push_back({ch, v, *u});
            }
            for (const Attempt& a : attempts)
                if (st.informed[a.callee] && !w.failed(a.callee))
                    w.send_set(a.ch, Direction::Pull, leader_msg);
            w.end_step();
            for (NodeId rcv : w.last_step_receivers())
                if (!st.informed[rcv]) {
                    st.informed[rcv] = 1;
                    st.receipt_step[rcv] = t;
                    // remember the contacted neighbor and the step in slot 0
                    NodeId parent = st.links[rcv][t % 4].node;
                    st.links[rcv][0] = {parent, t, LinkSlot::PullReceipt};
                }
        }
    }

    // Phase II: replay the recorded links in reverse time. For a push contact
    // the storing node opens the channel and the contacted side answers with
    // everything it has; for a pull receipt the storing node pushes its bundle
    // up and the contacted side answers in the same step.
    void gather(const MemoryState& st, FailureHook& fh) {
        const std::uint32_t T = rc.memory_phase1_push_steps + rc.memory_phase1_pull_steps;
        struct Replay {
            ChannelRef ch;
            NodeId opener;
            NodeId target;
            bool receipt;
        };
        std::vector<Replay> replays;
        for (std::uint32_t rt = 0; rt < T; ++rt) {
            const std::uint32_t s = T - 1 - rt;
            fh.on_step_begin(w, w.step_index());
            w.begin_step();
            replays.clear();
            for (NodeId v = 0; v < n; ++v) {
                if (w.failed(v)) continue;
                for (const LinkSlot& slot : st.links[v]) {
                    if (slot.node == kNoNode || slot.tag != s) continue;
                    if (slot.kind != LinkSlot::PushContact && slot.kind != LinkSlot::PullReceipt) continue;
                    ChannelRef ch = w.open_channel(v, slot.node, OpenKind::Addressed);
                    replays.push_back({ch, v, slot.node, slot.kind == LinkSlot::PullReceipt});
                    break;  // a node stores at most one link per step
                }
            }
            for (const Replay& r : replays) {
                w.send_set(r.ch, Direction::Pull, w.msgs(r.target));
                if (r.receipt) w.send_set(r.ch, Direction::Push, w.msgs(r.opener));
            }
            w.end_step();
        }
    }

    // Phase III: leader rebroadcasts the gathered bundle on the Phase-I
    // schedule, then a pull tail mops up (to completion by default). Open-avoid
    // draws run against the frozen link lists; nothing new is recorded.
    // Returns the number of tail steps used.
    std::uint32_t rebroadcast(const MemoryState& st, Rng& rng, FailureHook& fh, bool run_to_completion,
                              bool& cap_exceeded) {
        std::vector<std::int64_t> receipt3(n, -1);
        std::vector<std::uint8_t> informed3(n, 0);
        informed3[leader] = 1;
        const std::uint32_t R = rc.memory_phase3_steps;
        for (std::uint32_t t = 0; t < R; ++t) {
            fh.on_step_begin(w, w.step_index());
            w.begin_step();
            for (NodeId v = 0; v < n; ++v) {
                if (w.failed(v)) continue;
                bool is_active;
                if (v == leader) {
                    is_active = t < 4;
                } else if (informed3[v]) {
                    std::uint32_t j = std::uint32_t(receipt3[v]) / 4;
                    is_active = t >= 4 * (j + 1) && t < 4 * (j + 2);
                } else {
                    is_active = false;
                }
                if (!is_active) continue;
                NodeId buf[4];
                auto u = g.sample_neighbor_avoiding(v, {buf, avoid_of(st, v, buf)}, rng);
                if (!u) continue;
                ChannelRef ch = w.open_channel(v, *u, OpenKind::Avoid);
                w.send_set(ch, Direction::Push, w.msgs(v));
            }
            w.end_step();
            for (NodeId rcv : w.last_step_receivers())
                if (!informed3[rcv]) {
                    informed3[rcv] = 1;
                    receipt3[rcv] = t;
                }
        }

        auto all_informed3 = [&]() {
            for (NodeId v = 0; v < n; ++v)
                if (!w.failed(v) && !informed3[v]) return false;
            return true;
        };
        struct Attempt {
            ChannelRef ch;
            NodeId opener;
            NodeId callee;
        };
        std::vector<Attempt> attempts;
        std::uint32_t tail_steps = 0;
        const std::uint32_t tail_limit = run_to_completion ? rc.step_cap : rc.memory_phase3_pull_steps;
        while (tail_steps < tail_limit && !all_informed3()) {
            fh.on_step_begin(w, w.step_index());
            w.begin_step();
            attempts.clear();
            for (NodeId v = 0; v < n; ++v) {
                if (w.failed(v) || informed3[v]) continue;
                NodeId buf[4];
                auto u = g.sample_neighbor_avoiding(v, {buf, avoid_of(st, v, buf)}, rng);
                if (!u) continue;
                ChannelRef ch = w.open_channel(v, *u, OpenKind::Avoid);
                attempts.push_back({ch, v, *u});
            }
            for (const Attempt& a : attempts)
                if (informed3[a.callee] && !w.failed(a.callee))
                    w.send_set(a.ch, Direction::Pull, w.msgs(a.callee));
            w.end_step();
            for (NodeId rcv : w.last_step_receivers())
                if (!informed3[rcv]) informed3[rcv] = 1;
            tail_steps++;
        }
        if (run_to_completion && !all_informed3()) cap_exceeded = true;
        return tail_steps;
    }
};

std::int64_t count_lost(const World& w, const Bitset& gathered) {
    std::int64_t lost = 0;
    const auto& uni = w.universe();
    for (std::uint32_t i = 0; i < uni.size(); ++i) {
        if (w.failed(uni.origin_at(i))) continue;
        if (!gathered.test(i)) lost++;
    }
    return lost;
}

} // namespace

RunOutcome run_memory_gossiping(Graph& g, const ResolvedConstants& rc, std::uint64_t seed,
                                const RunConfig& cfg, NodeId leader) {
    return run_memory_gossiping_multi(g, rc, seed, cfg, leader, 1);
}

RunOutcome run_memory_gossiping_multi(Graph& g, const ResolvedConstants& rc, std::uint64_t seed,
                                      const RunConfig& cfg, NodeId leader, std::uint32_t tree_count) {
    if (tree_count == 0) throw std::invalid_argument("memory: tree_count must be >= 1");
    const std::uint32_t n = g.num_nodes();
    World w(n, cfg.universe, {cfg.trace, cfg.timeline});
    FailureHook fh(cfg.failure);
    RunOutcome o;
    o.leader = leader;

    if (n == 1) {
        o.n = 1;
        o.completed = true;
        o.gathered_at_leader = w.msgs(leader);
        o.additional_lost = 0;
        return o;
    }
    MemoryDriver driver(g, w, rc, leader);
    if (w.failed(leader)) {
        extract_outcome(w, o);
        o.completed = false;
        return o;
    }

    // All trees are built first; before_phase2 failures strike between the
    // last tree build and the first gather. Message state persists across
    // trees: a later gather may pick an origin up anywhere an earlier
    // (possibly blocked) gather already carried it.
    std::vector<MemoryState> trees;
    std::vector<Rng> tree_rngs;
    trees.reserve(tree_count);
    for (std::uint32_t i = 0; i < tree_count; ++i) {
        trees.emplace_back(n);
        tree_rngs.push_back(Rng::stream(tree_seed(seed, i), "memory.tree"));
        w.set_phase("tree" + std::to_string(i) + ".phase1");
        driver.build_tree(trees[i], tree_rngs[i], fh);
    }

    fh.on_phase2_boundary(w);

    for (std::uint32_t i = 0; i < tree_count; ++i) {
        w.set_phase("tree" + std::to_string(i) + ".phase2");
        driver.gather(trees[i], fh);
    }
    o.gathered_at_leader = w.msgs(leader);
    o.additional_lost = count_lost(w, o.gathered_at_leader);

    w.set_phase("phase3");
    bool cap_exceeded = false;
    Rng rng_p3 = Rng::stream(seed, "memory.phase3");
    std::uint32_t tail_steps =
        driver.rebroadcast(trees.back(), rng_p3, fh, cfg.run_to_completion, cap_exceeded);
    o.step_cap_exceeded = cap_exceeded;

    extract_outcome(w, o);
    o.steps_plus_one_sufficient = o.completed && tail_steps <= rc.memory_phase3_pull_steps + 1;

    // Linear communication bound (no-failure invariant at default constants).
    const double bound = 9.0 * double(n) * double(tree_count) + 64.0 * rc.log2n * rc.log2n;
    o.channel_bound_ok = double(o.channels_opened) <= bound;
    return o;
}

} // namespace gossip
