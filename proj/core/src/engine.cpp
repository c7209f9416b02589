#include "gossip/engine.hpp"

#include <algorithm>

namespace gossip {

TrackedUniverse TrackedUniverse::full(std::uint32_t n) {
    TrackedUniverse u;
    u.full_ = true;
    u.n_ = n;
    u.k_ = n;
    return u;
}

TrackedUniverse TrackedUniverse::subset(std::uint32_t n, std::vector<NodeId> ids) {
    TrackedUniverse u;
    u.full_ = false;
    u.n_ = n;
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    u.ids_ = std::move(ids);
    u.k_ = std::uint32_t(u.ids_.size());
    return u;
}

std::uint32_t TrackedUniverse::index_of(NodeId origin) const {
    if (full_) return origin < n_ ? origin : kNoIndex;
    auto it = std::lower_bound(ids_.begin(), ids_.end(), origin);
    if (it == ids_.end() || *it != origin) return kNoIndex;
    return std::uint32_t(it - ids_.begin());
}

NodeId TrackedUniverse::origin_at(std::uint32_t index) const {
    return full_ ? index : ids_[index];
}

World::World(std::uint32_t n, TrackedUniverse universe, EngineOptions opts)
    : n_(n), universe_(std::move(universe)), opts_(opts) {
    const std::uint32_t k = universe_.size();
    msgs_.reserve(n_);
    for (std::uint32_t v = 0; v < n_; ++v) msgs_.emplace_back(k);
    pending_.resize(n_);  // allocated lazily on first receive
    in_dirty_.assign(n_, 0);
    failed_.assign(n_, 0);
    has_outgoing_.assign(n_, 0);
    token_inbox_.resize(n_);
    id_inbox_.resize(n_);
    packets_by_node_.assign(n_, 0);
    informed_count_.assign(k, 0);

    alive_origin_mask_ = Bitset(k);
    for (std::uint32_t i = 0; i < k; ++i) alive_origin_mask_.set(i);
    alive_nodes_ = n_;

    // m_v(0) = {v} for every tracked origin.
    for (std::uint32_t i = 0; i < k; ++i) {
        NodeId owner = universe_.origin_at(i);
        msgs_[owner].set(i);
        informed_count_[i] = 1;
    }
    alive_pairs_ = k;
    target_pairs_ = std::uint64_t(alive_nodes_) * k;
    phases_.emplace_back("run", PhaseAccount{});
}

void World::set_phase(const std::string& name) {
    phases_.emplace_back(name, PhaseAccount{});
}

void World::begin_step() {
    if (in_step_) throw std::logic_error("engine: begin_step before previous step closed");
    in_step_ = true;
    channels_.clear();
    set_deliveries_.clear();
    token_deliveries_.clear();
    id_deliveries_.clear();
    for (NodeId v : openers_this_step_) has_outgoing_[v] = 0;
    openers_this_step_.clear();
}

ChannelRef World::open_channel(NodeId v, NodeId target, OpenKind kind) {
    if (!in_step_) throw std::logic_error("engine: open_channel outside a step");
    if (failed_[v]) return {};  // failed nodes do not communicate at all
    if (has_outgoing_[v]) throw std::logic_error("engine: DoubleOpen by node " + std::to_string(v));
    has_outgoing_[v] = 1;
    openers_this_step_.push_back(v);
    ChannelRef ref{std::uint32_t(channels_.size())};
    std::uint32_t trace_idx = 0;
    if (opts_.trace) {
        trace_idx = std::uint32_t(trace_.size());
        trace_.push_back({step_index_, v, target, kind, 0});
    }
    channels_.push_back({v, target, kind, trace_idx});
    channels_opened_++;
    phases_.back().second.channels_opened++;
    return ref;
}

NodeId World::sender_of(ChannelRef ch, Direction dir) const {
    const Channel& c = channels_[ch.idx];
    return dir == Direction::Push ? c.opener : c.callee;
}

NodeId World::receiver_of(ChannelRef ch, Direction dir) const {
    const Channel& c = channels_[ch.idx];
    return dir == Direction::Push ? c.callee : c.opener;
}

bool World::count_packet(ChannelRef ch, Direction dir) {
    if (!in_step_) throw std::logic_error("engine: send outside a step (ClosedChannel)");
    if (!ch.valid()) return false;
    NodeId src = sender_of(ch, dir);
    if (failed_[src]) return false;  // failed nodes refuse to transmit
    packets_sent_++;
    packets_by_node_[src]++;
    phases_.back().second.packets_sent++;
    if (opts_.trace) {
        trace_[channels_[ch.idx].trace_idx].packets++;
        send_events_.push_back({step_index_, src, receiver_of(ch, dir)});
    }
    return true;
}

void World::send_set(ChannelRef ch, Direction dir, const Bitset& payload) {
    if (!count_packet(ch, dir)) return;
    NodeId dst = receiver_of(ch, dir);
    if (failed_[dst]) return;  // transmitted but dropped
    set_deliveries_.push_back({dst, &payload});
}

void World::send_token(ChannelRef ch, Direction dir, Bitset payload, std::uint32_t moves) {
    if (!count_packet(ch, dir)) return;
    NodeId dst = receiver_of(ch, dir);
    if (failed_[dst]) return;
    token_deliveries_.emplace_back(dst, TokenDelivery{sender_of(ch, dir), moves, std::move(payload)});
}

void World::send_id(ChannelRef ch, Direction dir, NodeId id) {
    if (!count_packet(ch, dir)) return;
    NodeId dst = receiver_of(ch, dir);
    if (failed_[dst]) return;
    id_deliveries_.emplace_back(dst, IdDelivery{sender_of(ch, dir), id});
}

void World::end_step() {
    if (!in_step_) throw std::logic_error("engine: end_step without begin_step");

    // Stage all incoming payloads first (start-of-step snapshots), then merge.
    dirty_.clear();
    for (const SetDelivery& d : set_deliveries_) {
        Bitset& pend = pending_[d.receiver];
        if (pend.capacity() == 0) pend = Bitset(universe_.size());
        if (!in_dirty_[d.receiver]) {
            in_dirty_[d.receiver] = 1;
            dirty_.push_back(d.receiver);
        }
        pend.or_with(*d.payload);
    }
    // Token payloads also union into the host set at delivery time only if the
    // protocol decides so; the engine just parks them in the inbox.
    last_receivers_.clear();
    for (NodeId r : dirty_) {
        if (opts_.timeline) {
            msgs_[r].merge_count_new(pending_[r], [&](std::size_t bit) {
                informed_count_[bit]++;
                if (alive_origin_mask_.test(bit)) alive_pairs_++;
            });
        } else {
            // per-origin counts are only maintained in timeline mode
            std::size_t gained = 0, in_mask = 0;
            msgs_[r].merge_masked(pending_[r], alive_origin_mask_, gained, in_mask);
            alive_pairs_ += in_mask;
        }
        last_receivers_.push_back(r);
        pending_[r].clear();
        in_dirty_[r] = 0;
    }

    auto by_sender = [](const auto& a, const auto& b) {
        return a.second.sender < b.second.sender || (a.second.sender == b.second.sender && a.first < b.first);
    };
    std::stable_sort(token_deliveries_.begin(), token_deliveries_.end(), by_sender);
    for (auto& [dst, tok] : token_deliveries_) token_inbox_[dst].push_back(std::move(tok));
    std::stable_sort(id_deliveries_.begin(), id_deliveries_.end(), by_sender);
    for (auto& [dst, idm] : id_deliveries_) id_inbox_[dst].push_back(idm);

    if (opts_.timeline) timeline_.push_back(informed_count_);

    in_step_ = false;
    step_index_++;
    phases_.back().second.steps++;
}

void World::absorb(NodeId v, const Bitset& payload) {
    if (in_step_) throw std::logic_error("engine: absorb must run between steps");
    if (failed_[v]) return;
    if (opts_.timeline) {
        msgs_[v].merge_count_new(payload, [&](std::size_t bit) {
            informed_count_[bit]++;
            if (alive_origin_mask_.test(bit)) alive_pairs_++;
        });
    } else {
        std::size_t gained = 0, in_mask = 0;
        msgs_[v].merge_masked(payload, alive_origin_mask_, gained, in_mask);
        alive_pairs_ += in_mask;
    }
}

void World::fail_many(const std::vector<NodeId>& victims) {
    bool changed = false;
    for (NodeId v : victims) {
        if (failed_[v]) continue;
        failed_[v] = 1;
        alive_nodes_--;
        changed = true;
        token_inbox_[v].clear();
        id_inbox_[v].clear();
    }
    if (changed) recompute_alive_pairs();
}

void World::recompute_alive_pairs() {
    const std::uint32_t k = universe_.size();
    alive_origin_mask_.clear();
    std::uint32_t alive_origins = 0;
    for (std::uint32_t i = 0; i < k; ++i) {
        if (!failed_[universe_.origin_at(i)]) {
            alive_origin_mask_.set(i);
            alive_origins++;
        }
    }
    alive_pairs_ = 0;
    for (std::uint32_t v = 0; v < n_; ++v) {
        if (failed_[v]) continue;
        alive_pairs_ += msgs_[v].count_and(alive_origin_mask_);
    }
    target_pairs_ = std::uint64_t(alive_nodes_) * alive_origins;
}

} // namespace gossip
