// Counter-based pseudo-random streams: every draw index owns its own
// sub-stream, so results are reproducible regardless of batching or the
// number of worker threads.
#pragma once

#include <cstdint>

namespace cforge {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d4a2ca9cd2cbabULL;
    return z ^ (z >> 31);
}

} // namespace detail

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {
        // burn-in decorrelates nearby seeds
        detail::splitmix64(state_);
        detail::splitmix64(state_);
    }

    // Sub-stream for one draw index; independent of iteration order.
    static Rng for_draw(std::uint64_t seed, std::uint64_t draw_index) {
        std::uint64_t s = seed;
        detail::splitmix64(s);
        s ^= 0xd1342543de82ef95ULL * (draw_index + 1);
        return Rng(s);
    }

    std::uint64_t next_u64() { return detail::splitmix64(state_); }

    // Uniform on (0, 1), never exactly 0 or 1.
    double next_uniform() {
        const std::uint64_t bits = next_u64() >> 11; // 53 bits
        return (static_cast<double>(bits) + 0.5) * (1.0 / 9007199254740992.0);
    }

private:
    std::uint64_t state_;
};

} // namespace cforge
