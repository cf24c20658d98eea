#pragma once

#include "twsim/messages.hpp"
#include "twsim/rng.hpp"

#include <atomic>
#include <cstddef>
#include <deque>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace twsim
{
    class UnknownEndpoint : public std::out_of_range
    {
    public:
        using std::out_of_range::out_of_range;
    };

    // Unrecoverable delivery failure; aborts the run.
    class TransportError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    // Reliable, exactly-once delivery to the receiver's intake buffer. No
    // ordering guarantee, not even per sender. send() may be called
    // concurrently; each intake has a single consumer.
    class Transport
    {
    public:
        virtual ~Transport() = default;

        virtual void send(Message m) = 0;

        // Up to `max` pending messages for `me`, possibly none. Never blocks.
        virtual std::vector<Message> receive_batch(LpId me, std::size_t max) = 0;
    };

    // Thread-safe FIFO intake buffer.
    class Mailbox
    {
    public:
        void push(Message m);
        void push_many(std::vector<Message> &batch);
        std::vector<Message> pop_batch(std::size_t max);
        std::size_t size() const;

        // Copy of current contents (inspection only).
        std::vector<Message> snapshot() const;

    private:
        mutable std::mutex mu_;
        std::deque<Message> queue_;
    };

    // Index of an endpoint's mailbox: LPs at [0, L), controller at L.
    std::size_t endpoint_slot(LpId id, std::uint32_t num_lps);

    // Shared-memory backend: every endpoint lives in this process.
    class InProcTransport final : public Transport
    {
    public:
        explicit InProcTransport(std::uint32_t num_lps);

        void send(Message m) override;
        std::vector<Message> receive_batch(LpId me, std::size_t max) override;

        std::uint64_t sent_to(LpId id) const;
        std::uint64_t delivered_to(LpId id) const;
        std::size_t pending(LpId id) const;

    private:
        std::uint32_t num_lps_;
        std::vector<std::unique_ptr<Mailbox>> boxes_;
        std::unique_ptr<std::atomic<std::uint64_t>[]> sent_;
        std::unique_ptr<std::atomic<std::uint64_t>[]> delivered_;
    };

    // Single-threaded in-process backend with explicit delivery. Sent
    // messages wait in a global in-flight pool until the driver moves them
    // into their receiver's intake, in any order it likes. The whole system
    // state is inspectable between steps.
    class ScheduledTransport final : public Transport
    {
    public:
        explicit ScheduledTransport(std::uint32_t num_lps);

        void send(Message m) override;
        std::vector<Message> receive_batch(LpId me, std::size_t max) override;

        // Moves the in-flight message at `index` into its receiver's intake.
        void deliver(std::size_t index);
        // Delivers a uniformly chosen in-flight message; false if none.
        bool deliver_random(ParkMiller &rng);
        // Delivers everything in flight, in send order.
        void deliver_all();

        const std::vector<Message> &in_flight() const noexcept { return pool_; }
        const std::deque<Message> &intake(LpId id) const;

        std::uint64_t sent_total() const noexcept { return sent_; }
        std::uint64_t delivered_total() const noexcept { return delivered_; }

    private:
        std::uint32_t num_lps_;
        std::vector<Message> pool_;
        std::vector<std::deque<Message>> intakes_;
        std::uint64_t sent_ = 0;
        std::uint64_t delivered_ = 0;
    };
}
