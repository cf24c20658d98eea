#pragma once

#include "twsim/messages.hpp"

#include <cstdint>

namespace twsim
{
    // Park-Miller "minimal standard" generator: seed' = 16807 * seed mod (2^31 - 1).
    class ParkMiller
    {
    public:
        static constexpr std::int64_t kModulus = 2147483647;
        static constexpr std::int64_t kMultiplier = 16807;

        // Throws std::invalid_argument unless seed is in [1, 2^31 - 2].
        explicit ParkMiller(std::int64_t seed = 1);

        // Advances the state and returns it.
        std::int64_t next() noexcept
        {
            state_ = (kMultiplier * state_) % kModulus;
            return state_;
        }

        // Strictly inside (0, 1).
        double next_uniform01() noexcept { return static_cast<double>(next()) / static_cast<double>(kModulus); }

        // Inverse-transform exponential variate: -mean * ln(u). Throws for mean <= 0.
        double next_exponential(double mean);

        // Uniform integer in [0, n), n >= 1.
        std::uint32_t next_below(std::uint32_t n) noexcept;

        std::int64_t state() const noexcept { return state_; }

        // Advances the state by `steps` draws in O(log steps).
        void discard(std::uint64_t steps) noexcept;

        friend bool operator==(const ParkMiller &, const ParkMiller &) = default;

    private:
        std::int64_t state_;
    };

    // a^e mod (2^31 - 1).
    std::int64_t park_miller_power(std::uint64_t exponent) noexcept;

    // Distance between consecutive per-entity substreams.
    inline constexpr std::uint64_t kEntityStreamStride = std::uint64_t{1} << 19;

    // State for entity `entity`'s private stream: base advanced by
    // 1 + entity * kEntityStreamStride draws. Entity 0 is one step past base.
    ParkMiller seed_for_entity(std::int64_t base_seed, EntityId entity);

    bool is_valid_seed(std::int64_t seed) noexcept;
}
