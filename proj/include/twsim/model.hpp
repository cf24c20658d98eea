#pragma once

#include "twsim/messages.hpp"

#include <concepts>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace twsim
{
    // Placement of entities onto LPs. Defaults to the block partition
    // entity e -> floor(e * L / E).
    class EntityMap
    {
    public:
        using Mapping = std::function<LpId(EntityId)>;

        // Throws std::invalid_argument if either count is zero.
        EntityMap(std::uint32_t num_entities, std::uint32_t num_lps);

        // Custom placement. Every result must be < num_lps.
        EntityMap(std::uint32_t num_entities, std::uint32_t num_lps, Mapping mapping);

        // Throws std::out_of_range for entity >= num_entities().
        LpId route(EntityId entity) const;

        std::vector<EntityId> entities_of(LpId lp) const;

        std::uint32_t num_entities() const noexcept { return num_entities_; }
        std::uint32_t num_lps() const noexcept { return num_lps_; }

    private:
        std::uint32_t num_entities_;
        std::uint32_t num_lps_;
        Mapping mapping_;
    };

    struct Emission
    {
        EntityId target = 0;
        Timestamp timestamp{};
        Payload payload{};
    };

    // Event-emission capability handed to model callbacks. The engine turns
    // each emission into a message once the callback returns.
    class Emitter
    {
    public:
        void emit(EntityId target, Timestamp ts, Payload payload)
        {
            out_.push_back(Emission{target, ts, std::move(payload)});
        }

        std::vector<Emission> &emissions() noexcept { return out_; }
        void clear() noexcept { out_.clear(); }

    private:
        std::vector<Emission> out_;
    };

    // User simulation model.
    //
    // State is split into per-entity values and one LP-wide value. The engine
    // snapshots the receiving entity's state plus the shared state before every
    // event, so handle_event may only touch those two and must be a pure
    // function of them and its arguments.
    template <class M>
    concept SimulationModel =
        std::copyable<typename M::EntityState> && std::equality_comparable<typename M::EntityState> &&
        std::copyable<typename M::SharedState> && std::equality_comparable<typename M::SharedState> &&
        requires(const M &model, typename M::SharedState &shared, typename M::EntityState &entity,
                 std::span<const typename M::EntityState> entities, EntityId id, LpId lp,
                 std::span<const std::byte> payload, Timestamp ts, Emitter &emit) {
            { model.num_entities() } -> std::convertible_to<std::uint32_t>;
            { model.init_shared(lp) } -> std::same_as<typename M::SharedState>;
            { model.init_entity(id) } -> std::same_as<typename M::EntityState>;
            // Initial events of one entity, emitted before the run starts.
            model.initial_events(shared, entity, id, emit);
            { model.receiver_of(payload) } -> std::same_as<EntityId>;
            model.handle_event(shared, entity, id, payload, ts, emit);
            // Summary value reported when the LP terminates.
            { model.terminate(shared, entities) } -> std::convertible_to<std::uint64_t>;
        };
}
