#pragma once

#include <cmath>
#include <cstdint>

namespace reso {

// Counter-based generator (splitmix64 finalizer over seed + counter).
// Every stochastic component takes an explicit Rng so a run is fully
// reproducible from one seed; independent streams are derived with fork().
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = seed_ + (++counter_) * 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform in [lo, hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    std::uint64_t seed() const { return seed_; }

    // Independent stream keyed on (seed, tag); does not advance this stream.
    Rng fork(std::uint64_t tag) const {
        std::uint64_t z = seed_ ^ (0xD1B54A32D192ED03ULL + tag * 0x8CB92BA72F3D8DD7ULL);
        z = (z ^ (z >> 29)) * 0xFF51AFD7ED558CCDULL;
        z = (z ^ (z >> 32)) * 0xC4CEB9FE1A85EC53ULL;
        return Rng(z ^ (z >> 29));
    }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

} // namespace reso
