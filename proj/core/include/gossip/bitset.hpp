#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#if defined(__GNUC__) || defined(__clang__)
#include <bit>
#endif

namespace gossip {

// Fixed-capacity bit vector used for message-origin sets. Capacity is the
// size of the tracked origin universe, set once per run.
class Bitset {
public:
    Bitset() = default;
    explicit Bitset(std::size_t bits) : bits_(bits), words_((bits + 63) / 64, 0) {}

    std::size_t capacity() const { return bits_; }

    void set(std::size_t i) { words_[i >> 6] |= (1ULL << (i & 63)); }

    bool test(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1ULL; }

    void clear() { std::fill(words_.begin(), words_.end(), 0); }

    void or_with(const Bitset& other) {
        for (std::size_t w = 0; w < words_.size(); ++w) words_[w] |= other.words_[w];
    }

    std::size_t count() const {
        std::size_t c = 0;
        for (std::uint64_t w : words_) c += std::popcount(w);
        return c;
    }

    bool none() const {
        for (std::uint64_t w : words_)
            if (w) return false;
        return true;
    }

    bool contains_all(const Bitset& other) const {
        for (std::size_t w = 0; w < words_.size(); ++w)
            if (other.words_[w] & ~words_[w]) return false;
        return true;
    }

    std::size_t count_and(const Bitset& other) const {
        std::size_t c = 0;
        for (std::size_t w = 0; w < words_.size(); ++w)
            c += std::popcount(words_[w] & other.words_[w]);
        return c;
    }

    bool operator==(const Bitset& other) const {
        return bits_ == other.bits_ && words_ == other.words_;
    }

    // Merges `incoming` into this set and calls fn(bit) for every bit that was
    // newly gained. Returns the number of new bits.
    template <typename Fn>
    std::size_t merge_count_new(const Bitset& incoming, Fn&& fn) {
        std::size_t gained = 0;
        for (std::size_t w = 0; w < words_.size(); ++w) {
            std::uint64_t delta = incoming.words_[w] & ~words_[w];
            if (!delta) continue;
            words_[w] |= delta;
            gained += std::popcount(delta);
            while (delta) {
                unsigned b = std::countr_zero(delta);
                fn((w << 6) + b);
                delta &= delta - 1;
            }
        }
        return gained;
    }

    // Word-wise merge: reports how many new bits were gained in total and how
    // many of them fall inside `mask`, without per-bit work.
    void merge_masked(const Bitset& incoming, const Bitset& mask, std::size_t& gained,
                      std::size_t& gained_in_mask) {
        gained = 0;
        gained_in_mask = 0;
        for (std::size_t w = 0; w < words_.size(); ++w) {
            std::uint64_t delta = incoming.words_[w] & ~words_[w];
            if (!delta) continue;
            words_[w] |= delta;
            gained += std::popcount(delta);
            gained_in_mask += std::popcount(delta & mask.words_[w]);
        }
    }

    template <typename Fn>
    void for_each_bit(Fn&& fn) const {
        for (std::size_t w = 0; w < words_.size(); ++w) {
            std::uint64_t x = words_[w];
            while (x) {
                unsigned b = std::countr_zero(x);
                fn((w << 6) + b);
                x &= x - 1;
            }
        }
    }

private:
    std::size_t bits_ = 0;
    std::vector<std::uint64_t> words_;
};

} // namespace gossip
