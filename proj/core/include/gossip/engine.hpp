#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "gossip/bitset.hpp"
#include "gossip/graph.hpp"

namespace gossip {

enum class OpenKind : std::uint8_t { Uniform, Avoid, Addressed };
enum class Direction : std::uint8_t { Push, Pull };

// Origins followed exactly by the run. Full mode tracks every node; subset
// mode tracks K sampled node ids (full union semantics for those K, the rest
// only contribute to structural dynamics, never to sets).
class TrackedUniverse {
public:
    TrackedUniverse() = default;

    static TrackedUniverse full(std::uint32_t n);
    static TrackedUniverse subset(std::uint32_t n, std::vector<NodeId> ids);

    std::uint32_t size() const { return k_; }
    std::uint32_t graph_size() const { return n_; }
    bool is_full() const { return full_; }

    // Bit index of an origin, or kNoIndex if untracked.
    static constexpr std::uint32_t kNoIndex = 0xffffffffu;
    std::uint32_t index_of(NodeId origin) const;
    NodeId origin_at(std::uint32_t index) const;

private:
    bool full_ = true;
    std::uint32_t n_ = 0;
    std::uint32_t k_ = 0;
    std::vector<NodeId> ids_;  // sorted, subset mode
};

struct ChannelRef {
    std::uint32_t idx = std::numeric_limits<std::uint32_t>::max();
    bool valid() const { return idx != std::numeric_limits<std::uint32_t>::max(); }
};

struct TraceRecord {
    std::uint32_t step;
    NodeId opener;
    NodeId callee;
    OpenKind kind;
    std::uint32_t packets;
};

// Send event kept for the reachability replay oracle (trace mode only).
struct SendEvent {
    std::uint32_t step;
    NodeId src;
    NodeId dst;
};

struct TokenDelivery {
    NodeId sender;
    std::uint32_t moves;
    Bitset payload;
};

struct IdDelivery {
    NodeId sender;
    NodeId id;
};

struct PhaseAccount {
    std::uint64_t channels_opened = 0;
    std::uint64_t packets_sent = 0;
    std::uint32_t steps = 0;
};

struct EngineOptions {
    bool trace = false;            // keep per-channel trace + send events
    bool timeline = false;         // record informed counts per step
};

// Synchronous-round executor for the random phone call model. All payloads
// sent in a step are read from start-of-step state; unions apply at end_step,
// so the within-step action order never matters. One outgoing channel per
// node per step, all channels closed at step end.
class World {
public:
    World(std::uint32_t n, TrackedUniverse universe, EngineOptions opts = {});

    std::uint32_t num_nodes() const { return n_; }
    const TrackedUniverse& universe() const { return universe_; }

    void begin_step();
    ChannelRef open_channel(NodeId v, NodeId target, OpenKind kind);
    void send_set(ChannelRef ch, Direction dir, const Bitset& payload);
    void send_token(ChannelRef ch, Direction dir, Bitset payload, std::uint32_t moves);
    void send_id(ChannelRef ch, Direction dir, NodeId id);
    void end_step();

    NodeId channel_opener(ChannelRef ch) const { return channels_[ch.idx].opener; }
    NodeId channel_callee(ChannelRef ch) const { return channels_[ch.idx].callee; }

    const Bitset& msgs(NodeId v) const { return msgs_[v]; }
    bool failed(NodeId v) const { return failed_[v] != 0; }
    void fail_many(const std::vector<NodeId>& victims);

    // Between-steps union into a node's set (walk-token payload absorption);
    // keeps the informed bookkeeping consistent.
    void absorb(NodeId v, const Bitset& payload);

    // Nodes that received at least one set payload during the last end_step.
    const std::vector<NodeId>& last_step_receivers() const { return last_receivers_; }

    std::vector<TokenDelivery>& token_inbox(NodeId v) { return token_inbox_[v]; }
    std::vector<IdDelivery>& id_inbox(NodeId v) { return id_inbox_[v]; }

    std::uint32_t step_index() const { return step_index_; }
    std::uint64_t channels_opened() const { return channels_opened_; }
    std::uint64_t packets_sent() const { return packets_sent_; }
    std::uint64_t packets_by_node(NodeId v) const { return packets_by_node_[v]; }

    void set_phase(const std::string& name);
    const std::vector<std::pair<std::string, PhaseAccount>>& phase_accounts() const { return phases_; }

    // |I_o|: number of nodes currently holding tracked origin index o.
    // Maintained only in timeline mode.
    std::uint32_t informed_count(std::uint32_t origin_index) const { return informed_count_[origin_index]; }
    // informed counts snapshot after each step (timeline mode).
    const std::vector<std::vector<std::uint32_t>>& timeline() const { return timeline_; }

    std::uint32_t alive_nodes() const { return alive_nodes_; }
    // True when every non-failed node holds every tracked origin owned by a
    // non-failed node. A run with no survivors counts as incomplete.
    bool gossip_complete() const { return alive_nodes_ > 0 && alive_pairs_ == target_pairs_; }

    const std::vector<TraceRecord>& trace() const { return trace_; }
    const std::vector<SendEvent>& send_events() const { return send_events_; }

private:
    struct Channel {
        NodeId opener;
        NodeId callee;
        OpenKind kind;
        std::uint32_t trace_idx;
    };
    struct SetDelivery {
        NodeId receiver;
        const Bitset* payload;
    };

    NodeId sender_of(ChannelRef ch, Direction dir) const;
    NodeId receiver_of(ChannelRef ch, Direction dir) const;
    bool count_packet(ChannelRef ch, Direction dir);  // false if send is a no-op
    void recompute_alive_pairs();

    std::uint32_t n_;
    TrackedUniverse universe_;
    EngineOptions opts_;

    std::vector<Bitset> msgs_;
    std::vector<Bitset> pending_;
    std::vector<std::uint8_t> failed_;
    Bitset alive_origin_mask_;  // tracked origins whose owner is alive

    std::vector<Channel> channels_;
    std::vector<std::uint8_t> has_outgoing_;
    std::vector<NodeId> openers_this_step_;

    std::vector<SetDelivery> set_deliveries_;
    std::vector<std::pair<NodeId, TokenDelivery>> token_deliveries_;
    std::vector<std::pair<NodeId, IdDelivery>> id_deliveries_;
    std::vector<NodeId> dirty_;
    std::vector<std::uint8_t> in_dirty_;
    std::vector<NodeId> last_receivers_;
    std::vector<std::vector<TokenDelivery>> token_inbox_;
    std::vector<std::vector<IdDelivery>> id_inbox_;

    bool in_step_ = false;
    std::uint32_t step_index_ = 0;
    std::uint64_t channels_opened_ = 0;
    std::uint64_t packets_sent_ = 0;
    std::vector<std::uint64_t> packets_by_node_;

    std::vector<std::pair<std::string, PhaseAccount>> phases_;

    std::vector<std::uint32_t> informed_count_;
    std::uint64_t alive_pairs_ = 0;
    std::uint64_t target_pairs_ = 0;
    std::uint32_t alive_nodes_ = 0;

    std::vector<std::vector<std::uint32_t>> timeline_;
    std::vector<TraceRecord> trace_;
    std::vector<SendEvent> send_events_;
};

} // namespace gossip
