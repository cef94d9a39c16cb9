#include "riccilab/rng.hpp"

#include <cmath>

namespace riccilab {

namespace {
inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}
}  // namespace

Xoshiro256pp::Xoshiro256pp(std::uint64_t seed) {
    // Standard recommendation: fill the state with successive splitmix64 outputs.
    std::uint64_t sm = seed;
    for (auto& word : s_) {
        word = splitmix64(sm);
        sm = word;
    }
}

std::uint64_t Xoshiro256pp::next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Xoshiro256pp::next_uniform() {
    // 53-bit mantissa shifted into (0, 1]; never exactly 0 so log() is safe.
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double Xoshiro256pp::next_gaussian() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
}

}  // namespace riccilab
