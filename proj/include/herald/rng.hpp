#pragma once

#include "herald/util.hpp"

#include <cassert>
#include <cstdint>
#include <vector>

namespace herald {

// splitmix64 generator. All randomness in a run flows from one scenario seed
// through named sub-streams, so individual components can be re-seeded
// without disturbing the others. Distributions are implemented by hand to
// keep sequences identical across standard libraries.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    static Rng stream(uint64_t seed, std::string_view name) {
        return Rng(fnv1a64(name, kFnvOffset ^ seed) | 1ull);
    }

    uint64_t next() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi].
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [lo, hi], inclusive.
    int uniform_int(int lo, int hi) {
        assert(hi >= lo);
        uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(next() % span);
    }

    // Index into `weights` drawn proportionally; weights must be non-negative
    // with a positive sum.
    size_t pick_weighted(const std::vector<double> &weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        assert(total > 0.0);
        double r = uniform() * total;
        for (size_t i = 0; i < weights.size(); ++i) {
            r -= weights[i];
            if (r < 0.0) return i;
        }
        return weights.size() - 1;
    }

private:
    uint64_t state_;
};

} // namespace herald
