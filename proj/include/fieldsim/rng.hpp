#pragma once
#include <cstdint>
#include <cmath>
#include <string>
#include <string_view>
#include <map>
#include <stdexcept>
#include <vector>

// Deterministic seeding and random streams. Every stochastic component in the
// library draws from Rng so that a (seed, tag) pair reproduces the same stream
// on any platform. The derivation constants below are part of the on-disk
// reproducibility contract and must not change between versions.

namespace fieldsim {

// FNV-1a, 64-bit.
inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

// SplitMix64 finalizer. Bijective avalanche mix.
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Substream seed for (master_seed, tag). Pure and stable: substream(s, t) ==
// mix64(s XOR fnv1a64(t)). Distinct tags give distinct seeds unless FNV-1a
// collides, and distinct masters always give distinct seeds for a fixed tag
// (mix64 is a bijection).
inline uint64_t derive_substream(uint64_t master_seed, std::string_view tag) {
    if (tag.empty()) throw std::invalid_argument("derive_substream: empty tag");
    return mix64(master_seed ^ fnv1a64(tag));
}

// Indexed variant for per-cycle / per-class streams.
inline uint64_t derive_substream(uint64_t master_seed, std::string_view tag, uint64_t index) {
    return mix64(derive_substream(master_seed, tag) + 0x9e3779b97f4a7c15ull * (index + 1));
}

struct SeedBundle {
    uint64_t master_seed = 0;
    std::map<std::string, uint64_t> substreams;

    explicit SeedBundle(uint64_t master = 0) : master_seed(master) {}

    uint64_t get(const std::string& tag) {
        auto it = substreams.find(tag);
        if (it != substreams.end()) return it->second;
        uint64_t s = derive_substream(master_seed, tag);
        substreams.emplace(tag, s);
        return s;
    }
};

// SplitMix64 stream. Small state, cheap to fork, identical everywhere.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) : state_(seed) {}

    uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0,1), 53-bit resolution.
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform integer in [0, n). Modulo bias is < n/2^64; determinism matters
    // more than the bias here.
    uint64_t next_below(uint64_t n) { return n ? next_u64() % n : 0; }

    int uniform_int(int lo, int hi) {  // inclusive range
        return lo + int(next_below(uint64_t(hi - lo + 1)));
    }

    // Standard normal via Box-Muller; caches the second variate.
    double next_normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = next_double(), u2 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = size_t(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Independent child stream; k distinguishes siblings.
    Rng fork(uint64_t k) const { return Rng(mix64(state_ + 0xd1342543de82ef95ull * (k + 1))); }

private:
    uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace fieldsim
