#include "twsim/sequential.hpp"

#include "twsim/event_queue.hpp"

namespace twsim
{
    Trace run_sequential(const PholdConfig &cfg)
    {
        PholdModel model(cfg);
        EntityMap map(cfg.entities, cfg.lps);

        std::vector<PholdModel::SharedState> shared;
        for (LpId lp = 0; lp < cfg.lps; ++lp)
        {
            shared.push_back(model.init_shared(lp));
        }
        std::vector<PholdModel::EntityState> entities;
        entities.reserve(cfg.entities);
        for (EntityId e = 0; e < cfg.entities; ++e)
        {
            entities.push_back(model.init_entity(e));
        }

        EventQueue fel(EventQueue::TieOrder::SenderSequence);
        SeqNumber seq = 0;
        Emitter emit;
        auto schedule = [&] {
            for (auto &em : emit.emissions())
            {
                Message m;
                m.kind = MessageKind::Event;
                m.seq_number = seq++;
                m.lp_receiver = map.route(em.target);
                m.payload = std::move(em.payload);
                m.timestamp = em.timestamp;
                fel.insert(std::move(m));
            }
            emit.clear();
        };

        for (EntityId e = 0; e < cfg.entities; ++e)
        {
            model.initial_events(shared[map.route(e)], entities[e], e, emit);
            schedule();
        }

        Trace trace;
        while (const Message *head = fel.peek_min())
        {
            if (head->timestamp >= cfg.end_time)
            {
                break;
            }
            Message ev = *fel.pop_min();
            const EntityId target = model.receiver_of(ev.payload);
            trace.push_back(TraceEntry{ev.timestamp, target, payload_digest(ev.payload)});
            model.handle_event(shared[map.route(target)], entities[target], target, ev.payload, ev.timestamp, emit);
            schedule();
        }
        return trace;
    }
}
