#include "gossip/graph.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace gossip {

namespace {

bool in_avoid(NodeId u, std::span<const NodeId> avoid) {
    for (NodeId a : avoid)
        if (a == u) return true;
    return false;
}

} // namespace

Graph Graph::generate(const GraphModel& model, std::uint64_t seed) {
    Graph g;
    g.model_ = model;
    g.topo_rng_ = Rng::stream(seed, "graph.topology");
    if (model.n == 0) throw std::invalid_argument("graph: n must be positive");

    switch (model.kind) {
        case GraphKind::ErdosRenyi: {
            if (!(model.p > 0.0) || model.p > 1.0)
                throw std::invalid_argument("graph: p must be in (0,1]");
            if (model.p * model.n < 1.0)
                throw std::invalid_argument("graph: p*n < 1 refused (degenerate sweep)");
            g.build_er(seed);
            break;
        }
        case GraphKind::Configuration: {
            if (model.d == 0) throw std::invalid_argument("graph: d must be positive");
            if ((std::uint64_t(model.d) * model.n) % 2 != 0)
                throw std::invalid_argument("graph: d*n must be even");
            const std::uint64_t total = std::uint64_t(model.d) * model.n;
            g.slots_.assign(total, kNoNode);
            g.paired_.assign(model.n, 0);
            g.free_pool_.reserve(total);
            g.pool_pos_.resize(total);
            for (NodeId v = 0; v < model.n; ++v)
                for (std::uint32_t s = 0; s < model.d; ++s) {
                    g.pool_pos_[std::uint64_t(v) * model.d + s] = std::uint32_t(g.free_pool_.size());
                    g.free_pool_.push_back({v, s});
                }
            break;
        }
    }
    return g;
}

void Graph::build_er(std::uint64_t seed) {
    Rng gen = Rng::stream(seed, "graph.er");
    const std::uint32_t n = model_.n;
    const double p = model_.p;

    std::vector<std::pair<NodeId, NodeId>> edges;
    if (p >= 1.0) {
        edges.reserve(std::uint64_t(n) * (n - 1) / 2);
        for (NodeId v = 1; v < n; ++v)
            for (NodeId w = 0; w < v; ++w) edges.emplace_back(v, w);
    } else {
        // Geometric skips over the n*(n-1)/2 candidate pairs.
        const double logq = std::log(1.0 - p);
        std::int64_t v = 1, w = -1;
        while (v < std::int64_t(n)) {
            double r = gen.uniform();
            w += 1 + std::int64_t(std::floor(std::log(1.0 - r) / logq));
            while (w >= v && v < std::int64_t(n)) {
                w -= v;
                v += 1;
            }
            if (v < std::int64_t(n)) edges.emplace_back(NodeId(v), NodeId(w));
        }
    }

    offsets_.assign(std::size_t(n) + 1, 0);
    for (auto [a, b] : edges) {
        offsets_[a + 1]++;
        offsets_[b + 1]++;
    }
    for (std::uint32_t i = 0; i < n; ++i) offsets_[i + 1] += offsets_[i];
    targets_.resize(edges.size() * 2);
    std::vector<std::uint64_t> cursor(offsets_.begin(), offsets_.end() - 1);
    for (auto [a, b] : edges) {
        targets_[cursor[a]++] = b;
        targets_[cursor[b]++] = a;
    }
    for (NodeId v = 0; v < n; ++v)
        std::sort(targets_.begin() + offsets_[v], targets_.begin() + offsets_[v + 1]);
}

std::uint32_t Graph::degree(NodeId v) const {
    if (model_.kind == GraphKind::Configuration) return paired_[v];
    return std::uint32_t(offsets_[v + 1] - offsets_[v]);
}

std::uint32_t Graph::free_stubs(NodeId v) const {
    if (model_.kind != GraphKind::Configuration) return 0;
    return model_.d - paired_[v];
}

std::span<const NodeId> Graph::neighbors(NodeId v) const {
    return {targets_.data() + offsets_[v], targets_.data() + offsets_[v + 1]};
}

std::uint64_t Graph::num_edges() const {
    if (model_.kind == GraphKind::Configuration) return paired_edges_;
    return targets_.size() / 2;
}

void Graph::pool_remove(NodeId v, std::uint32_t slot) {
    std::uint32_t idx = pool_pos_[std::uint64_t(v) * model_.d + slot];
    Stub last = free_pool_.back();
    free_pool_[idx] = last;
    pool_pos_[std::uint64_t(last.node) * model_.d + last.slot] = idx;
    free_pool_.pop_back();
}

NodeId Graph::pair_stub(NodeId v, std::uint32_t slot) {
    pool_remove(v, slot);
    std::uint32_t pick = topo_rng_.below32(std::uint32_t(free_pool_.size()));
    Stub other = free_pool_[pick];
    pool_remove(other.node, other.slot);
    slots_[std::uint64_t(v) * model_.d + slot] = other.node;
    slots_[std::uint64_t(other.node) * model_.d + other.slot] = v;
    paired_[v]++;
    paired_[other.node]++;
    paired_edges_++;
    return other.node;
}

std::optional<NodeId> Graph::sample_neighbor(NodeId v, Rng& rng) {
    if (model_.kind == GraphKind::Configuration) {
        std::uint32_t slot = rng.below32(model_.d);
        NodeId target = slots_[std::uint64_t(v) * model_.d + slot];
        if (target != kNoNode) return target;
        return pair_stub(v, slot);
    }
    const std::uint32_t deg = degree(v);
    if (deg == 0) return std::nullopt;
    return targets_[offsets_[v] + rng.below32(deg)];
}

std::optional<NodeId> Graph::sample_neighbor_avoiding(NodeId v, std::span<const NodeId> avoid, Rng& rng) {
    if (model_.kind == GraphKind::Configuration) {
        // Uniform over the d stubs whose (known) endpoint is not avoided; an
        // unpaired stub is always acceptable since its endpoint is still open.
        const std::uint32_t d = model_.d;
        for (int tries = 0; tries < 64; ++tries) {
            std::uint32_t slot = rng.below32(d);
            NodeId target = slots_[std::uint64_t(v) * d + slot];
            if (target == kNoNode) return pair_stub(v, slot);
            if (!in_avoid(target, avoid)) return target;
        }
        std::uint32_t ok = 0;
        for (std::uint32_t s = 0; s < d; ++s) {
            NodeId t = slots_[std::uint64_t(v) * d + s];
            if (t == kNoNode || !in_avoid(t, avoid)) ok++;
        }
        if (ok == 0) return sample_neighbor(v, rng);  // every stub leads into the avoid set
        std::uint32_t k = rng.below32(ok);
        for (std::uint32_t s = 0; s < d; ++s) {
            NodeId t = slots_[std::uint64_t(v) * d + s];
            if (t == kNoNode || !in_avoid(t, avoid)) {
                if (k-- == 0) {
                    if (t == kNoNode) return pair_stub(v, s);
                    return t;
                }
            }
        }
        return std::nullopt;  // unreachable
    }

    const std::uint32_t deg = degree(v);
    if (deg == 0) return std::nullopt;
    auto nb = neighbors(v);
    if (deg > avoid.size()) {
        // A non-avoided neighbor exists; rejection terminates quickly.
        for (int tries = 0; tries < 64; ++tries) {
            NodeId u = nb[rng.below32(deg)];
            if (!in_avoid(u, avoid)) return u;
        }
    }
    std::uint32_t ok = 0;
    for (NodeId u : nb)
        if (!in_avoid(u, avoid)) ok++;
    if (ok == 0) return nb[rng.below32(deg)];  // N(v) exhausted by the avoid set
    std::uint32_t k = rng.below32(ok);
    for (NodeId u : nb)
        if (!in_avoid(u, avoid) && k-- == 0) return u;
    return std::nullopt;  // unreachable
}

void Graph::dump(std::ostream& out) const {
    std::vector<std::pair<NodeId, NodeId>> edges;
    if (model_.kind == GraphKind::Configuration) {
        // Emit each paired edge once: keep (v,t) with v<t, and every second
        // slot of a self-loop (a loop occupies two slots of the same node).
        std::uint64_t self_seen = 0;
        for (NodeId v = 0; v < model_.n; ++v)
            for (std::uint32_t s = 0; s < model_.d; ++s) {
                NodeId t = slots_[std::uint64_t(v) * model_.d + s];
                if (t == kNoNode) continue;
                if (v < t) edges.emplace_back(v, t);
                else if (v == t && (self_seen++ % 2 == 0)) edges.emplace_back(v, t);
            }
    } else {
        for (NodeId v = 0; v < model_.n; ++v)
            for (NodeId u : neighbors(v))
                if (v <= u) edges.emplace_back(v, u);
    }
    std::sort(edges.begin(), edges.end());
    out << model_.n << ' ' << edges.size() << '\n';
    for (auto [a, b] : edges) out << a << ' ' << b << '\n';
}

Graph Graph::load(std::istream& in) {
    std::uint32_t n = 0;
    std::uint64_t m = 0;
    if (!(in >> n >> m)) throw std::runtime_error("graph load: bad header");
    Graph g;
    g.model_ = GraphModel::erdos_renyi(n, 1.0);
    g.model_.p = 0.0;  // loaded topology, probability not meaningful
    std::vector<std::pair<NodeId, NodeId>> edges;
    edges.reserve(m);
    for (std::uint64_t i = 0; i < m; ++i) {
        NodeId a, b;
        if (!(in >> a >> b)) throw std::runtime_error("graph load: truncated edge list");
        if (a >= n || b >= n) throw std::runtime_error("graph load: node id out of range");
        edges.emplace_back(a, b);
    }
    g.offsets_.assign(std::size_t(n) + 1, 0);
    for (auto [a, b] : edges) {
        g.offsets_[a + 1]++;
        if (b != a) g.offsets_[b + 1]++;
    }
    for (std::uint32_t i = 0; i < n; ++i) g.offsets_[i + 1] += g.offsets_[i];
    g.targets_.resize(g.offsets_[n]);
    std::vector<std::uint64_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
    for (auto [a, b] : edges) {
        g.targets_[cursor[a]++] = b;
        if (b != a) g.targets_[cursor[b]++] = a;
    }
    for (NodeId v = 0; v < n; ++v)
        std::sort(g.targets_.begin() + g.offsets_[v], g.targets_.begin() + g.offsets_[v + 1]);
    return g;
}

} // namespace gossip
