#pragma once

#include <cstdint>
#include <random>

namespace lp {

// Reproducible random source.
//
// Engine: std::mt19937_64, whose output sequence is fixed by the C++ standard.
// Seeding: SplitMix64 applied to (seed, stream) so that independent substreams
// (per redraw, per subject, per layer) can be derived without sharing state.
// Distributions are implemented here rather than taken from <random>, because
// the standard leaves their algorithms to the vendor:
//   uniform()  53 high bits of one engine output, in [0, 1)
//   normal()   Box-Muller, both variates used
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t next_u64() { return engine_(); }
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal();
    double normal(double mean, double sd) { return mean + sd * normal(); }
    // Unbiased integer in [0, n).
    std::uint64_t below(std::uint64_t n);
    bool coin() { return (engine_() >> 63) != 0; }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Stable 64-bit mixing of a seed with a stream index.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

} // namespace lp
