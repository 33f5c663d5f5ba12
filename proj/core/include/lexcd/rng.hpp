#pragma once

#include <cstdint>
#include <random>

namespace lexcd {

// mt19937_64 with explicit bit-to-float conversion so that streams are
// reproducible independent of the standard library's distribution
// implementations.
class Rng {
  public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [lo, hi] via rejection-free modulo of a wide draw;
    // bias is negligible for the small ranges used here.
    int uniform_int(int lo, int hi) {
        const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(gen_() % span);
    }

    bool coin(double p = 0.5) { return uniform() < p; }

    // Derive an independent child stream; used to give every sample/epoch its
    // own deterministic generator.
    static uint64_t mix(uint64_t a, uint64_t b) {
        uint64_t x = a + 0x9e3779b97f4a7c15ULL * (b + 1);
        x ^= x >> 30;
        x *= 0xbf58476d1ce4e5b9ULL;
        x ^= x >> 27;
        x *= 0x94d049bb133111ebULL;
        x ^= x >> 31;
        return x;
    }

  private:
    std::mt19937_64 gen_;
};

}  // namespace lexcd
