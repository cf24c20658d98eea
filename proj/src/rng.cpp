#include "twsim/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace twsim
{
    bool is_valid_seed(std::int64_t seed) noexcept
    {
        return seed >= 1 && seed <= ParkMiller::kModulus - 1;
    }

    ParkMiller::ParkMiller(std::int64_t seed) : state_(seed)
    {
        if (!is_valid_seed(seed))
        {
            throw std::invalid_argument("park-miller seed must be in [1, 2^31-2], got " + std::to_string(seed));
        }
    }

    double ParkMiller::next_exponential(double mean)
    {
        if (!(mean > 0.0))
        {
            throw std::invalid_argument("exponential mean must be positive");
        }
        return -mean * std::log(next_uniform01());
    }

    std::uint32_t ParkMiller::next_below(std::uint32_t n) noexcept
    {
        auto k = static_cast<std::uint32_t>(next_uniform01() * static_cast<double>(n));
        return k < n ? k : n - 1;
    }

    std::int64_t park_miller_power(std::uint64_t exponent) noexcept
    {
        std::int64_t result = 1;
        std::int64_t base = ParkMiller::kMultiplier;
        while (exponent > 0)
        {
            if (exponent & 1u)
            {
                result = (result * base) % ParkMiller::kModulus;
            }
            base = (base * base) % ParkMiller::kModulus;
            exponent >>= 1;
        }
        return result;
    }

    void ParkMiller::discard(std::uint64_t steps) noexcept
    {
        state_ = (park_miller_power(steps) * state_) % kModulus;
    }

    ParkMiller seed_for_entity(std::int64_t base_seed, EntityId entity)
    {
        ParkMiller r(base_seed);
        r.discard(1 + std::uint64_t{entity} * kEntityStreamStride);
        return r;
    }
}
