#include "twsim/phold.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace twsim
{
    void PholdConfig::validate() const
    {
        if (lps == 0)
        {
            throw std::invalid_argument("phold: need at least one LP");
        }
        if (entities == 0)
        {
            throw std::invalid_argument("phold: need at least one entity");
        }
        if (!(rho > 0.0 && rho <= 1.0))
        {
            throw std::invalid_argument("phold: rho must be in (0, 1]");
        }
        if (!(mean_increment > 0.0) || !std::isfinite(mean_increment))
        {
            throw std::invalid_argument("phold: mean_increment must be positive");
        }
        if (!is_valid_seed(base_seed))
        {
            throw std::invalid_argument("phold: base_seed must be in [1, 2^31-2]");
        }
    }

    std::uint32_t initial_event_count(const PholdConfig &cfg)
    {
        return static_cast<std::uint32_t>(std::llround(cfg.rho * cfg.entities));
    }

    double workload_loop(std::uint64_t n) noexcept
    {
        double acc = 1.0;
        std::uint64_t i = 0;
        for (; i + 1 < n; i += 2)
        {
            acc = acc * 1.0000001;
            acc = acc + 1e-9;
        }
        if (i < n)
        {
            acc = acc * 1.0000001;
        }
        return acc;
    }

    PholdModel::PholdModel(PholdConfig cfg) : cfg_(cfg)
    {
        cfg_.validate();
        originators_ = initial_event_count(cfg_);
    }

    PholdModel::SharedState PholdModel::init_shared(LpId) const
    {
        SharedState s;
        if (cfg_.rng_mode == RngMode::PerLp)
        {
            s.rng = ParkMiller(cfg_.base_seed);
        }
        return s;
    }

    PholdModel::EntityState PholdModel::init_entity(EntityId id) const
    {
        EntityState s;
        if (cfg_.rng_mode == RngMode::PerEntity)
        {
            s.rng = seed_for_entity(cfg_.base_seed, id);
        }
        return s;
    }

    ParkMiller &PholdModel::stream(SharedState &shared, EntityState &entity) const
    {
        return shared.rng ? *shared.rng : entity.rng;
    }

    void PholdModel::initial_events(SharedState &shared, EntityState &entity, EntityId id, Emitter &emit) const
    {
        if (id >= originators_)
        {
            return;
        }
        auto &rng = stream(shared, entity);
        const EntityId recipient = rng.next_below(cfg_.entities);
        const double delay = rng.next_exponential(cfg_.mean_increment);
        emit.emit(recipient, Timestamp(delay), encode_payload({id, recipient, 0}));
    }

    EntityId PholdModel::receiver_of(std::span<const std::byte> payload) const
    {
        return decode_phold_payload(payload).entity_receiver;
    }

    void PholdModel::handle_event(SharedState &shared, EntityState &entity, EntityId self, std::span<const std::byte> payload,
                                  Timestamp ts, Emitter &emit) const
    {
        const auto in = decode_phold_payload(payload);
        if (in.entity_receiver != self)
        {
            throw std::logic_error("phold: event for entity " + std::to_string(in.entity_receiver) + " delivered to " +
                                   std::to_string(self));
        }
        const double work = workload_loop(cfg_.workload_fpops);
        auto &rng = stream(shared, entity);
        const EntityId recipient = rng.next_below(cfg_.entities);
        const double delay = rng.next_exponential(cfg_.mean_increment);
        ++entity.processed;

        const std::uint64_t value = std::bit_cast<std::uint64_t>(work) ^ (entity.processed * 0x9E3779B97F4A7C15ull) ^ in.value;
        emit.emit(recipient, Timestamp(ts.value() + delay), encode_payload({self, recipient, value}));
    }

    std::uint64_t PholdModel::terminate(const SharedState &, std::span<const EntityState> entities) const
    {
        std::uint64_t total = 0;
        for (const auto &e : entities)
        {
            total += e.processed;
        }
        return total;
    }

    std::vector<Message> init_events(const PholdConfig &cfg)
    {
        PholdModel model(cfg);
        EntityMap map(cfg.entities, cfg.lps);
        std::vector<Message> out;
        std::vector<SeqNumber> seq(cfg.lps, 0);
        std::vector<PholdModel::SharedState> shared;
        for (LpId lp = 0; lp < cfg.lps; ++lp)
        {
            shared.push_back(model.init_shared(lp));
        }
        Emitter emit;
        for (EntityId e = 0; e < cfg.entities; ++e)
        {
            const LpId lp = map.route(e);
            auto state = model.init_entity(e);
            emit.clear();
            model.initial_events(shared[lp], state, e, emit);
            for (auto &em : emit.emissions())
            {
                Message m;
                m.kind = MessageKind::Event;
                m.seq_number = seq[lp]++;
                m.lp_sender = lp;
                m.lp_receiver = map.route(em.target);
                m.payload = std::move(em.payload);
                m.timestamp = em.timestamp;
                out.push_back(std::move(m));
            }
        }
        return out;
    }
}
