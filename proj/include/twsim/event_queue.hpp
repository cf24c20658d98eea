#pragma once

#include "twsim/messages.hpp"

#include <cstddef>
#include <deque>
#include <map>
#include <optional>

namespace twsim
{
    // Pending events of one LP, keyed by timestamp. Each key holds the bucket
    // of simultaneous events scheduled at that time.
    class EventQueue
    {
    public:
        enum class TieOrder
        {
            // Bucket keeps arrival order.
            Fifo,
            // Bucket kept sorted by (lp_sender, seq_number); arrival order
            // breaks remaining ties.
            SenderSequence,
        };

        EventQueue() = default;
        explicit EventQueue(TieOrder order) : order_(order) {}

        // Throws std::invalid_argument for anything but an Event.
        void insert(Message m);

        std::optional<Message> pop_min();

        // Removes the Event annihilated by `anti`, if present.
        bool remove_matching(const Message &anti);

        std::optional<Timestamp> min_timestamp() const;

        const Message *peek_min() const;

        std::size_t size() const noexcept { return size_; }
        bool empty() const noexcept { return size_ == 0; }

        // Buckets in increasing timestamp order.
        const std::map<Timestamp, std::deque<Message>> &buckets() const noexcept { return buckets_; }

        friend bool operator==(const EventQueue &a, const EventQueue &b) { return a.size_ == b.size_ && a.buckets_ == b.buckets_; }

    private:
        std::map<Timestamp, std::deque<Message>> buckets_;
        std::size_t size_ = 0;
        TieOrder order_ = TieOrder::Fifo;
    };
}
