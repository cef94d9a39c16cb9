#pragma once

#include <cstdint>

namespace riccilab {

/// splitmix64 output function (one mixing round).
inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// xoshiro256++ with Box-Muller gaussians drawn from consecutive uniform pairs.
class Xoshiro256pp {
public:
    explicit Xoshiro256pp(std::uint64_t seed);

    std::uint64_t next_u64();
    /// Uniform in (0, 1].
    double next_uniform();
    double next_gaussian();

private:
    std::uint64_t s_[4];
    double cached_ = 0.0;
    bool has_cached_ = false;
};

/// Seeded stream derivation: the path stream depends only on (master_seed,
/// path_index), never on scheduling, so ensembles are reproducible across
/// worker counts.
struct RngSpec {
    std::uint64_t master_seed = 0;

    std::uint64_t path_seed(std::uint64_t path_index) const {
        return splitmix64(master_seed ^ ((path_index + 1) * 0x9E3779B97F4A7C15ULL));
    }
    Xoshiro256pp stream_for_path(std::uint64_t path_index) const {
        return Xoshiro256pp(path_seed(path_index));
    }
};

}  // namespace riccilab
