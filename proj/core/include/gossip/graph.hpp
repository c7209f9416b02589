#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gossip/rng.hpp"

namespace gossip {

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = 0xffffffffu;

enum class GraphKind { ErdosRenyi, Configuration };

struct GraphModel {
    GraphKind kind = GraphKind::ErdosRenyi;
    std::uint32_t n = 0;
    double p = 0.0;       // ErdosRenyi: edge probability in (0,1]
    std::uint32_t d = 0;  // Configuration: stubs per node, d*n even

    static GraphModel erdos_renyi(std::uint32_t n, double p) { return {GraphKind::ErdosRenyi, n, p, 0}; }
    static GraphModel configuration(std::uint32_t n, std::uint32_t d) { return {GraphKind::Configuration, n, 0.0, d}; }
};

// Communication topology. ER graphs are fully materialized and immutable after
// generation. Configuration-model graphs keep all stubs unpaired at first and
// pair them lazily when a stub is first used (principle of deferred decisions);
// the pairing target is drawn from a dedicated topology stream so protocol
// draws and topology draws never interleave. Multi-edges and self-loops are
// kept, not resampled.
class Graph {
public:
    static Graph generate(const GraphModel& model, std::uint64_t seed);

    const GraphModel& model() const { return model_; }
    std::uint32_t num_nodes() const { return model_.n; }

    // ER: fixed degree. Configuration: paired stubs, self-loops counting twice.
    std::uint32_t degree(NodeId v) const;
    std::uint32_t free_stubs(NodeId v) const;

    // Uniform neighbor; pairs a fresh stub on first use (configuration model).
    // Returns nullopt for an isolated node. `rng` supplies the caller's choice
    // draws; pairing draws come from the graph's own stream.
    std::optional<NodeId> sample_neighbor(NodeId v, Rng& rng);

    // Uniform over N(v) minus the avoid set; falls back to uniform over N(v)
    // when every neighbor is in the avoid set.
    std::optional<NodeId> sample_neighbor_avoiding(NodeId v, std::span<const NodeId> avoid, Rng& rng);

    // ER / loaded graphs only.
    std::span<const NodeId> neighbors(NodeId v) const;

    std::uint64_t num_edges() const;  // paired edges for the configuration model

    // Edge-list text format: header "n m", then one "u v" line per edge, sorted.
    void dump(std::ostream& out) const;
    static Graph load(std::istream& in);

private:
    Graph() = default;

    void build_er(std::uint64_t seed);
    NodeId pair_stub(NodeId v, std::uint32_t slot);
    void pool_remove(NodeId v, std::uint32_t slot);

    GraphModel model_;
    Rng topo_rng_;

    // ER storage (CSR).
    std::vector<std::uint64_t> offsets_;
    std::vector<NodeId> targets_;

    // Configuration storage: slot -> paired endpoint or kNoNode.
    std::vector<NodeId> slots_;           // n * d entries
    std::vector<std::uint32_t> paired_;   // paired stub count per node (loops count twice)
    struct Stub { NodeId node; std::uint32_t slot; };
    std::vector<Stub> free_pool_;
    std::vector<std::uint32_t> pool_pos_; // (v*d+slot) -> index in free_pool_
    std::uint64_t paired_edges_ = 0;
};

} // namespace gossip
