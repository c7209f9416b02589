#include <benchmark/benchmark.h>

#include <cmath>

#include "gossip/experiment.hpp"
#include "gossip/graph.hpp"
#include "gossip/protocols.hpp"

namespace {

using namespace gossip;

void BM_GenerateER(benchmark::State& state) {
    const std::uint32_t n = std::uint32_t(state.range(0));
    double lg = std::log2(double(n));
    GraphModel m = GraphModel::erdos_renyi(n, lg * lg / n);
    std::uint64_t seed = 1;
    for (auto _ : state) {
        Graph g = Graph::generate(m, seed++);
        benchmark::DoNotOptimize(g.num_edges());
    }
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_GenerateER)->Arg(1 << 12)->Arg(1 << 14)->Arg(1 << 16);

void BM_SampleNeighbor(benchmark::State& state) {
    const std::uint32_t n = 1 << 12;
    double lg = std::log2(double(n));
    Graph g = Graph::generate(GraphModel::erdos_renyi(n, lg * lg / n), 7);
    Rng rng(123);
    NodeId v = 0;
    for (auto _ : state) {
        auto u = g.sample_neighbor(v, rng);
        benchmark::DoNotOptimize(u);
        v = (v + 1) & (n - 1);
    }
}
BENCHMARK(BM_SampleNeighbor);

void BM_SampleNeighborAvoiding(benchmark::State& state) {
    const std::uint32_t n = 1 << 12;
    double lg = std::log2(double(n));
    Graph g = Graph::generate(GraphModel::erdos_renyi(n, lg * lg / n), 7);
    Rng rng(123);
    NodeId avoid[4] = {1, 2, 3, 4};
    NodeId v = 0;
    for (auto _ : state) {
        auto u = g.sample_neighbor_avoiding(v, {avoid, 4}, rng);
        benchmark::DoNotOptimize(u);
        v = (v + 1) & (n - 1);
    }
}
BENCHMARK(BM_SampleNeighborAvoiding);

void BM_BitsetUnion(benchmark::State& state) {
    const std::uint32_t bits = std::uint32_t(state.range(0));
    Bitset a(bits), b(bits);
    for (std::uint32_t i = 0; i < bits; i += 3) b.set(i);
    for (auto _ : state) {
        a.or_with(b);
        benchmark::DoNotOptimize(a.count());
    }
    state.SetBytesProcessed(state.iterations() * (bits / 8));
}
BENCHMARK(BM_BitsetUnion)->Arg(1 << 12)->Arg(1 << 16);

void BM_PushPullRun(benchmark::State& state) {
    const std::uint32_t n = std::uint32_t(state.range(0));
    ProtocolConstants pc;
    ResolvedConstants rc = resolve_constants(pc, n);
    double lg = std::log2(double(n));
    std::uint64_t seed = 99;
    for (auto _ : state) {
        Graph g = Graph::generate(GraphModel::erdos_renyi(n, lg * lg / n), seed);
        RunConfig cfg;
        cfg.universe = TrackedUniverse::full(n);
        RunOutcome out = run_push_pull(g, rc, seed++, cfg);
        benchmark::DoNotOptimize(out.packets_sent);
    }
}
BENCHMARK(BM_PushPullRun)->Arg(1 << 10)->Arg(1 << 12)->Unit(benchmark::kMillisecond);

void BM_MemoryRun(benchmark::State& state) {
    const std::uint32_t n = std::uint32_t(state.range(0));
    ProtocolConstants pc;
    ResolvedConstants rc = resolve_constants(pc, n);
    double lg = std::log2(double(n));
    std::uint64_t seed = 7;
    for (auto _ : state) {
        Graph g = Graph::generate(GraphModel::erdos_renyi(n, lg * lg / n), seed);
        RunConfig cfg;
        cfg.universe = TrackedUniverse::full(n);
        RunOutcome out = run_memory_gossiping(g, rc, seed++, cfg, 0);
        benchmark::DoNotOptimize(out.packets_sent);
    }
}
BENCHMARK(BM_MemoryRun)->Arg(1 << 12)->Arg(1 << 14)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
