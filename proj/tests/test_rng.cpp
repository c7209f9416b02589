#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>
#include <vector>

#include "gossip/bitset.hpp"
#include "gossip/rng.hpp"

using namespace gossip;

TEST_CASE("identical seeds give identical sequences") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) CHECK(a.next() == b.next());
}

TEST_CASE("named streams are independent and reproducible") {
    Rng a = Rng::stream(7, "graph.topology");
    Rng a2 = Rng::stream(7, "graph.topology");
    Rng b = Rng::stream(7, "fast.phase1");
    CHECK(a.next() == a2.next());
    bool differs = false;
    Rng a3 = Rng::stream(7, "graph.topology");
    for (int i = 0; i < 16; ++i)
        if (a3.next() != b.next()) differs = true;
    CHECK(differs);
}

TEST_CASE("bounded draws stay in range and look uniform") {
    Rng r(12345);
    const std::uint64_t bound = 16;
    std::vector<std::uint64_t> hist(bound, 0);
    const int draws = 160000;
    for (int i = 0; i < draws; ++i) {
        std::uint64_t x = r.below(bound);
        REQUIRE(x < bound);
        hist[x]++;
    }
    const double expect = double(draws) / double(bound);
    const double sigma = std::sqrt(expect * (1.0 - 1.0 / double(bound)));
    for (std::uint64_t c : hist) CHECK(std::abs(double(c) - expect) < 6.0 * sigma);
}

TEST_CASE("uniform doubles live in [0,1)") {
    Rng r(3);
    for (int i = 0; i < 10000; ++i) {
        double x = r.uniform();
        REQUIRE(x >= 0.0);
        REQUIRE(x < 1.0);
    }
}

TEST_CASE("bernoulli edge probabilities") {
    Rng r(4);
    CHECK_FALSE(r.bernoulli(0.0));
    CHECK(r.bernoulli(1.0));
}

TEST_CASE("cell seeds depend on every field and nothing else") {
    std::uint64_t s = derive_seed(1, "memory", 4096, 0, 3);
    CHECK(s == derive_seed(1, "memory", 4096, 0, 3));
    std::set<std::uint64_t> distinct{
        derive_seed(1, "memory", 4096, 0, 3), derive_seed(2, "memory", 4096, 0, 3),
        derive_seed(1, "fast", 4096, 0, 3),   derive_seed(1, "memory", 8192, 0, 3),
        derive_seed(1, "memory", 4096, 1, 3), derive_seed(1, "memory", 4096, 0, 4)};
    CHECK(distinct.size() == 6);
}

TEST_CASE("bitset union is monotone and merge reports new bits") {
    Rng r(99);
    for (int iter = 0; iter < 200; ++iter) {
        const std::size_t bits = 1 + r.below(300);
        Bitset a(bits), b(bits);
        for (std::size_t i = 0; i < bits; ++i) {
            if (r.bernoulli(0.3)) a.set(i);
            if (r.bernoulli(0.3)) b.set(i);
        }
        const std::size_t ca = a.count(), cb = b.count();
        Bitset u = a;
        std::size_t gained = u.merge_count_new(b, [](std::size_t) {});
        CHECK(u.count() == ca + gained);
        CHECK(u.count() >= std::max(ca, cb));
        CHECK(u.contains_all(a));
        CHECK(u.contains_all(b));
        Bitset u2 = b;
        u2.or_with(a);
        CHECK(u == u2);
    }
}
