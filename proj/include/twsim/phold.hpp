#pragma once

#include "twsim/messages.hpp"
#include "twsim/model.hpp"
#include "twsim/rng.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace twsim
{
    enum class RngMode
    {
        // Each entity owns a private stream; the committed trace does not
        // depend on how entities are partitioned.
        PerEntity,
        // All entities of an LP share one stream seeded with the base seed.
        PerLp,
    };

    struct PholdConfig
    {
        std::uint32_t lps = 1;
        std::uint32_t entities = 840;
        double rho = 0.5;
        std::uint64_t workload_fpops = 0;
        double mean_increment = 5.0;
        Timestamp end_time{1000.0};
        std::int64_t base_seed = 12345;
        RngMode rng_mode = RngMode::PerEntity;

        // Throws std::invalid_argument on out-of-range fields.
        void validate() const;
    };

    // round(rho * E).
    std::uint32_t initial_event_count(const PholdConfig &cfg);

    // Runs exactly n serially dependent floating-point operations (alternating
    // multiply and add) and returns the accumulator. n = 0 returns 1.0.
    double workload_loop(std::uint64_t n) noexcept;

    // PHOLD: constant event population, exponential timestamp increments,
    // recipients uniform over all entities (self included).
    class PholdModel
    {
    public:
        struct EntityState
        {
            ParkMiller rng{1};
            std::uint64_t processed = 0;

            friend bool operator==(const EntityState &, const EntityState &) = default;
        };

        // Only used in RngMode::PerLp.
        struct SharedState
        {
            std::optional<ParkMiller> rng;

            friend bool operator==(const SharedState &, const SharedState &) = default;
        };

        explicit PholdModel(PholdConfig cfg);

        const PholdConfig &config() const noexcept { return cfg_; }
        std::uint32_t num_entities() const noexcept { return cfg_.entities; }

        SharedState init_shared(LpId lp) const;
        EntityState init_entity(EntityId id) const;
        void initial_events(SharedState &shared, EntityState &entity, EntityId id, Emitter &emit) const;
        EntityId receiver_of(std::span<const std::byte> payload) const;
        void handle_event(SharedState &shared, EntityState &entity, EntityId self, std::span<const std::byte> payload,
                          Timestamp ts, Emitter &emit) const;
        std::uint64_t terminate(const SharedState &shared, std::span<const EntityState> entities) const;

    private:
        ParkMiller &stream(SharedState &shared, EntityState &entity) const;

        PholdConfig cfg_;
        std::uint32_t originators_;
    };

    static_assert(SimulationModel<PholdModel>);

    // The initial event list for cfg, as the LPs of a cfg.lps-way block
    // partition would send it (senders and per-LP sequence numbers included).
    std::vector<Message> init_events(const PholdConfig &cfg);
}
