#pragma once

#include "twsim/errors.hpp"
#include "twsim/event_queue.hpp"
#include "twsim/messages.hpp"
#include "twsim/model.hpp"
#include "twsim/trace.hpp"
#include "twsim/transport.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace twsim
{
    struct LpOptions
    {
        // Bound on messages classified per drain.
        std::size_t max_received_messages = 64;
        // Events at or beyond this time are never executed.
        Timestamp end_time = Timestamp::infinity();
        // Keep (timestamp, entity, digest) of every committed event.
        bool record_trace = false;
    };

    enum class LpStatus
    {
        Running,
        Terminating,
    };

    // One Time Warp logical process.
    //
    // Speculatively executes its inbox in timestamp order, checkpoints the
    // touched state before each event, and undoes work when a straggler or an
    // antimessage for an already-processed event shows up. Not thread-safe:
    // exactly one execution context drives an LP.
    template <SimulationModel M>
    class LogicalProcess
    {
    public:
        using EntityState = typename M::EntityState;
        using SharedState = typename M::SharedState;

        // Pre-execution checkpoint of one processed event.
        struct HistoryEntry
        {
            Timestamp timestamp{};
            EntityState entity_snapshot{};
            SharedState shared_snapshot{};
            Message event{};
        };

        LogicalProcess(LpId id, const M &model, const EntityMap &map, Transport &transport, LpOptions options = {})
            : id_(id),
              model_(&model),
              map_(&map),
              transport_(&transport),
              options_(options),
              inbox_(EventQueue::TieOrder::SenderSequence),
              shared_(model.init_shared(id))
        {
            if (options_.max_received_messages == 0)
            {
                throw std::invalid_argument("max_received_messages must be at least 1");
            }
            local_index_.assign(map.num_entities(), kNotHosted);
            for (EntityId e : map.entities_of(id))
            {
                local_index_[e] = static_cast<std::uint32_t>(hosted_.size());
                hosted_.push_back(e);
                entities_.push_back(model.init_entity(e));
            }
        }

        // Emits the initial events of every hosted entity. Call once, before
        // any GVT round can start.
        void bootstrap()
        {
            for (std::size_t i = 0; i < hosted_.size(); ++i)
            {
                emitter_.clear();
                model_->initial_events(shared_, entities_[i], hosted_[i], emitter_);
                for (auto &em : emitter_.emissions())
                {
                    send_event(std::move(em));
                }
            }
            emitter_.clear();
        }

        // Classifies up to max_received_messages pending transport messages.
        std::size_t drain_transport()
        {
            auto batch = transport_->receive_batch(id_, options_.max_received_messages);
            for (auto &m : batch)
            {
                receive(std::move(m));
            }
            return batch.size();
        }

        // Classifies one delivered message.
        void receive(Message m)
        {
            if (status_ != LpStatus::Running)
            {
                return;
            }
            switch (m.kind)
            {
            case MessageKind::Event:
                if (m.timestamp < gvt_)
                {
                    throw ProtocolError("LP " + std::to_string(id_) + " received event below GVT: " + describe(m));
                }
                send_ack(m);
                if (auto it = anti_messages_.find(identity_of(m)); it != anti_messages_.end())
                {
                    anti_messages_.erase(it);
                    ++annihilated_;
                }
                else
                {
                    inbox_.insert(std::move(m));
                }
                break;
            case MessageKind::Antimessage:
                send_ack(m);
                handle_antimessage(m);
                break;
            case MessageKind::Ack:
            case MessageKind::MarkedAck:
                on_ack(m);
                break;
            case MessageKind::GvtRequest:
                on_gvt_request(m);
                break;
            case MessageKind::GvtBroadcast:
                // Broadcasts may overtake each other or the next request.
                fossil_collect(std::max(m.timestamp, gvt_));
                if (m.seq_number == gvt_round_)
                {
                    find_mode_ = false;
                }
                break;
            case MessageKind::Stop:
                finish(m.timestamp);
                break;
            case MessageKind::Shutdown:
                throw RemoteAbort(std::string(reinterpret_cast<const char *>(m.payload.data()), m.payload.size()));
            default:
                throw ProtocolError("LP " + std::to_string(id_) + " cannot handle " + describe(m));
            }
        }

        // Executes the lowest pending event, or rolls back if it is a
        // straggler. Returns false when there is nothing to execute.
        bool step()
        {
            if (status_ != LpStatus::Running)
            {
                return false;
            }
            const Message *head = inbox_.peek_min();
            if (head == nullptr || head->timestamp >= options_.end_time)
            {
                return false;
            }
            Message e = *inbox_.pop_min();
            if (e.timestamp < lvt_)
            {
                rollback(e.timestamp);
                inbox_.insert(std::move(e));
                return true;
            }
            execute(std::move(e));
            return true;
        }

        // drain_transport() followed by step(). True if anything happened.
        bool poll()
        {
            const bool got = drain_transport() > 0;
            const bool stepped = step();
            return got || stepped;
        }

        // Undoes every processed event with timestamp >= t, one rollback.
        void rollback(Timestamp t)
        {
            if (t < gvt_)
            {
                throw ProtocolError("LP " + std::to_string(id_) + " asked to roll back to " + std::to_string(t.value()) +
                                    " below GVT " + std::to_string(gvt_.value()));
            }
            if (history_.empty() || history_.back().timestamp < t)
            {
                return;
            }
            ++rollbacks_;

            std::vector<Message> local_children;
            std::size_t undone = 0;
            while (!history_.empty() && history_.back().timestamp >= t)
            {
                HistoryEntry &entry = history_.back();
                entities_[local_index_of(entry.event)] = std::move(entry.entity_snapshot);
                shared_ = std::move(entry.shared_snapshot);

                auto proc = proc_messages_.find(identity_of(entry.event));
                if (proc == proc_messages_.end())
                {
                    throw ProtocolError("history entry without emission record: " + describe(entry.event));
                }
                for (auto &child : proc->second)
                {
                    if (child.lp_receiver == id_)
                    {
                        local_children.push_back(std::move(child));
                    }
                    else
                    {
                        send_remote(make_antimessage(child));
                        ++antimessages_sent_;
                    }
                }
                proc_messages_.erase(proc);

                inbox_.insert(std::move(entry.event));
                history_.pop_back();
                ++undone;
            }
            events_rolled_back_ += undone;
            lvt_ = !history_.empty() ? history_.back().timestamp : base_ ? base_->timestamp : Timestamp{};

            // Every local child is pending again: either it was never
            // executed, or it was undone above and re-enqueued.
            for (const auto &child : local_children)
            {
                if (!inbox_.remove_matching(make_antimessage(child)))
                {
                    throw ProtocolError("LP " + std::to_string(id_) + " lost local child " + describe(child));
                }
            }
        }

        void handle_antimessage(const Message &anti)
        {
            if (anti.kind != MessageKind::Antimessage)
            {
                throw std::invalid_argument("handle_antimessage: expected an antimessage");
            }
            if (inbox_.remove_matching(anti))
            {
                ++annihilated_;
                return;
            }
            if (proc_messages_.contains(identity_of(anti)))
            {
                rollback(anti.timestamp);
                if (!inbox_.remove_matching(anti))
                {
                    throw ProtocolError("rolled-back victim missing from inbox: " + describe(anti));
                }
                ++annihilated_;
                return;
            }
            if (anti.timestamp < gvt_)
            {
                throw ProtocolError("LP " + std::to_string(id_) + " received antimessage below GVT: " + describe(anti));
            }
            // The victim is still in flight.
            anti_messages_.emplace(identity_of(anti), anti);
        }

        // Commits and discards checkpoints older than new_gvt. The newest
        // discarded entry stays available as the restoration base.
        void fossil_collect(Timestamp new_gvt)
        {
            if (new_gvt < gvt_)
            {
                throw ProtocolError("LP " + std::to_string(id_) + ": GVT regressed from " + std::to_string(gvt_.value()) +
                                    " to " + std::to_string(new_gvt.value()));
            }
            gvt_ = new_gvt;
            while (!history_.empty() && history_.front().timestamp < new_gvt)
            {
                HistoryEntry &entry = history_.front();
                commit(entry);
                if (auto proc = proc_messages_.find(identity_of(entry.event)); proc != proc_messages_.end())
                {
                    for (const auto &child : proc->second)
                    {
                        ++committed_sends_;
                        committed_remote_sends_ += child.lp_receiver != id_;
                    }
                    proc_messages_.erase(proc);
                }
                base_ = std::move(entry);
                history_.pop_front();
            }
        }

        // Lower bound on any timestamp this LP can still introduce: pending
        // events, buffered antimessages, unacknowledged sends and the marked
        // acks seen this round. +infinity when there is none.
        Timestamp local_min() const
        {
            Timestamp m = Timestamp::infinity();
            if (auto q = inbox_.min_timestamp())
            {
                m = std::min(m, *q);
            }
            if (!to_ack_.empty())
            {
                m = std::min(m, to_ack_.begin()->first);
            }
            if (marked_min_)
            {
                m = std::min(m, *marked_min_);
            }
            for (const auto &[id, anti] : anti_messages_)
            {
                m = std::min(m, anti.timestamp);
            }
            return m;
        }

        LpReport report() const
        {
            LpReport r;
            r.lp = id_;
            r.rollbacks = rollbacks_;
            r.events_processed = events_processed_;
            r.events_rolled_back = events_rolled_back_;
            r.events_committed = events_committed_;
            r.peak_history = peak_history_;
            r.events_sent = events_sent_;
            r.remote_sends = remote_sends_;
            r.antimessages_sent = antimessages_sent_;
            r.committed_sends = committed_sends_;
            r.committed_remote_sends = committed_remote_sends_;
            r.summary = summary_;
            r.trace = committed_;
            return r;
        }

        LpId id() const noexcept { return id_; }
        LpStatus status() const noexcept { return status_; }
        Timestamp lvt() const noexcept { return lvt_; }
        Timestamp gvt() const noexcept { return gvt_; }
        std::uint64_t rollbacks() const noexcept { return rollbacks_; }
        bool find_mode() const noexcept { return find_mode_; }
        std::optional<Timestamp> marked_min() const noexcept { return marked_min_; }
        SeqNumber message_seq_number() const noexcept { return seq_; }

        const EventQueue &inbox() const noexcept { return inbox_; }
        const std::deque<HistoryEntry> &history() const noexcept { return history_; }
        const std::optional<HistoryEntry> &restoration_base() const noexcept { return base_; }
        const std::unordered_map<EventIdentity, Message, EventIdentityHash> &anti_messages() const noexcept { return anti_messages_; }
        const std::unordered_map<EventIdentity, std::vector<Message>, EventIdentityHash> &proc_messages() const noexcept { return proc_messages_; }
        const std::multiset<std::pair<Timestamp, SeqNumber>> &to_ack_messages() const noexcept { return to_ack_; }
        const std::optional<Message> &current_event() const noexcept { return current_event_; }
        const Trace &committed_trace() const noexcept { return committed_; }

        const SharedState &shared_state() const noexcept { return shared_; }
        const std::vector<EntityState> &entity_states() const noexcept { return entities_; }
        const std::vector<EntityId> &hosted_entities() const noexcept { return hosted_; }

    private:
        static constexpr std::uint32_t kNotHosted = std::numeric_limits<std::uint32_t>::max();

        std::uint32_t local_index_of(const Message &event) const
        {
            const EntityId target = model_->receiver_of(event.payload);
            if (target >= local_index_.size() || local_index_[target] == kNotHosted)
            {
                throw ProtocolError("LP " + std::to_string(id_) + " does not host entity " + std::to_string(target));
            }
            return local_index_[target];
        }

        void execute(Message e)
        {
            const auto idx = local_index_of(e);
            const EntityId target = hosted_[idx];
            history_.push_back(HistoryEntry{e.timestamp, entities_[idx], shared_, e});
            peak_history_ = std::max<std::uint64_t>(peak_history_, history_.size());

            emitter_.clear();
            current_event_ = e;
            model_->handle_event(shared_, entities_[idx], target, e.payload, e.timestamp, emitter_);
            current_event_.reset();

            std::vector<Message> sent;
            sent.reserve(emitter_.emissions().size());
            for (auto &em : emitter_.emissions())
            {
                if (em.timestamp < e.timestamp)
                {
                    throw ProtocolError("model scheduled an event in the past: " + std::to_string(em.timestamp.value()) +
                                        " < " + std::to_string(e.timestamp.value()));
                }
                sent.push_back(send_event(std::move(em)));
            }
            emitter_.clear();
            proc_messages_[identity_of(e)] = std::move(sent);
            lvt_ = e.timestamp;
            ++events_processed_;
        }

        Message send_event(Emission em)
        {
            Message m;
            m.kind = MessageKind::Event;
            m.seq_number = seq_++;
            m.lp_sender = id_;
            m.lp_receiver = map_->route(em.target);
            m.payload = std::move(em.payload);
            m.timestamp = em.timestamp;
            ++events_sent_;
            if (m.lp_receiver == id_)
            {
                inbox_.insert(m);
            }
            else
            {
                ++remote_sends_;
                send_remote(m);
            }
            return m;
        }

        void send_remote(Message m)
        {
            to_ack_.emplace(m.timestamp, m.seq_number);
            transport_->send(std::move(m));
        }

        void send_ack(const Message &received)
        {
            transport_->send(make_ack(received, find_mode_));
        }

        void on_ack(const Message &ack)
        {
            auto it = to_ack_.find({ack.timestamp, ack.seq_number});
            if (it == to_ack_.end())
            {
                throw ProtocolError("LP " + std::to_string(id_) + " got ack for unknown message " + describe(ack));
            }
            to_ack_.erase(it);
            if (ack.kind == MessageKind::MarkedAck)
            {
                marked_min_ = marked_min_ ? std::min(*marked_min_, ack.timestamp) : ack.timestamp;
            }
        }

        void on_gvt_request(const Message &request)
        {
            find_mode_ = true;
            gvt_round_ = std::max(gvt_round_, request.seq_number);
            Message reply;
            reply.kind = MessageKind::GvtReport;
            reply.seq_number = request.seq_number;
            reply.lp_sender = id_;
            reply.lp_receiver = kControllerId;
            reply.timestamp = local_min();
            marked_min_.reset();
            transport_->send(std::move(reply));
        }

        void commit(const HistoryEntry &entry)
        {
            ++events_committed_;
            if (options_.record_trace)
            {
                committed_.push_back(TraceEntry{entry.timestamp, model_->receiver_of(entry.event.payload),
                                                payload_digest(entry.event.payload)});
            }
        }

        void finish(Timestamp final_gvt)
        {
            fossil_collect(std::max(final_gvt, gvt_));
            summary_ = model_->terminate(shared_, std::span<const EntityState>(entities_));
            status_ = LpStatus::Terminating;

            Message done;
            done.kind = MessageKind::LpFinished;
            done.lp_sender = id_;
            done.lp_receiver = kControllerId;
            done.timestamp = gvt_;
            done.payload = encode_report(report());
            transport_->send(std::move(done));
        }

        LpId id_;
        const M *model_;
        const EntityMap *map_;
        Transport *transport_;
        LpOptions options_;

        EventQueue inbox_;
        std::unordered_map<EventIdentity, std::vector<Message>, EventIdentityHash> proc_messages_;
        std::multiset<std::pair<Timestamp, SeqNumber>> to_ack_;
        std::deque<HistoryEntry> history_;
        std::optional<HistoryEntry> base_;
        std::optional<Message> current_event_;
        std::unordered_map<EventIdentity, Message, EventIdentityHash> anti_messages_;

        SharedState shared_;
        std::vector<EntityState> entities_;
        std::vector<EntityId> hosted_;
        std::vector<std::uint32_t> local_index_;
        Emitter emitter_;

        Timestamp lvt_{};
        Timestamp gvt_{};
        bool find_mode_ = false;
        std::uint64_t gvt_round_ = 0;
        std::optional<Timestamp> marked_min_;
        SeqNumber seq_ = 0;
        LpStatus status_ = LpStatus::Running;

        std::uint64_t rollbacks_ = 0;
        std::uint64_t events_processed_ = 0;
        std::uint64_t events_rolled_back_ = 0;
        std::uint64_t events_committed_ = 0;
        std::uint64_t peak_history_ = 0;
        std::uint64_t events_sent_ = 0;
        std::uint64_t remote_sends_ = 0;
        std::uint64_t antimessages_sent_ = 0;
        std::uint64_t committed_sends_ = 0;
        std::uint64_t committed_remote_sends_ = 0;
        std::uint64_t annihilated_ = 0;
        std::uint64_t summary_ = 0;
        Trace committed_;
    };
}
