#include "twsim/transport.hpp"

#include <algorithm>
#include <string>
#include <utility>

namespace twsim
{
    void Mailbox::push(Message m)
    {
        std::lock_guard lock(mu_);
        queue_.push_back(std::move(m));
    }

    void Mailbox::push_many(std::vector<Message> &batch)
    {
        std::lock_guard lock(mu_);
        for (auto &m : batch)
        {
            queue_.push_back(std::move(m));
        }
        batch.clear();
    }

    std::vector<Message> Mailbox::pop_batch(std::size_t max)
    {
        std::vector<Message> out;
        std::lock_guard lock(mu_);
        const std::size_t n = std::min(max, queue_.size());
        out.reserve(n);
        for (std::size_t i = 0; i < n; ++i)
        {
            out.push_back(std::move(queue_.front()));
            queue_.pop_front();
        }
        return out;
    }

    std::size_t Mailbox::size() const
    {
        std::lock_guard lock(mu_);
        return queue_.size();
    }

    std::vector<Message> Mailbox::snapshot() const
    {
        std::lock_guard lock(mu_);
        return {queue_.begin(), queue_.end()};
    }

    std::size_t endpoint_slot(LpId id, std::uint32_t num_lps)
    {
        if (id == kControllerId)
        {
            return num_lps;
        }
        if (id >= num_lps)
        {
            throw UnknownEndpoint("unknown endpoint LP " + std::to_string(id));
        }
        return id;
    }

    namespace
    {
        void check_max(std::size_t max)
        {
            if (max == 0)
            {
                throw std::invalid_argument("receive_batch: max must be at least 1");
            }
        }
    }

    InProcTransport::InProcTransport(std::uint32_t num_lps)
        : num_lps_(num_lps),
          sent_(new std::atomic<std::uint64_t>[num_lps + 1]),
          delivered_(new std::atomic<std::uint64_t>[num_lps + 1])
    {
        for (std::uint32_t i = 0; i <= num_lps; ++i)
        {
            boxes_.push_back(std::make_unique<Mailbox>());
            sent_[i] = 0;
            delivered_[i] = 0;
        }
    }

    void InProcTransport::send(Message m)
    {
        const auto slot = endpoint_slot(m.lp_receiver, num_lps_);
        sent_[slot].fetch_add(1, std::memory_order_relaxed);
        boxes_[slot]->push(std::move(m));
    }

    std::vector<Message> InProcTransport::receive_batch(LpId me, std::size_t max)
    {
        check_max(max);
        const auto slot = endpoint_slot(me, num_lps_);
        auto batch = boxes_[slot]->pop_batch(max);
        delivered_[slot].fetch_add(batch.size(), std::memory_order_relaxed);
        return batch;
    }

    std::uint64_t InProcTransport::sent_to(LpId id) const
    {
        return sent_[endpoint_slot(id, num_lps_)].load();
    }

    std::uint64_t InProcTransport::delivered_to(LpId id) const
    {
        return delivered_[endpoint_slot(id, num_lps_)].load();
    }

    std::size_t InProcTransport::pending(LpId id) const
    {
        return boxes_[endpoint_slot(id, num_lps_)]->size();
    }

    ScheduledTransport::ScheduledTransport(std::uint32_t num_lps)
        : num_lps_(num_lps), intakes_(num_lps + 1)
    {
    }

    void ScheduledTransport::send(Message m)
    {
        endpoint_slot(m.lp_receiver, num_lps_);
        ++sent_;
        pool_.push_back(std::move(m));
    }

    std::vector<Message> ScheduledTransport::receive_batch(LpId me, std::size_t max)
    {
        check_max(max);
        auto &q = intakes_[endpoint_slot(me, num_lps_)];
        std::vector<Message> out;
        while (!q.empty() && out.size() < max)
        {
            out.push_back(std::move(q.front()));
            q.pop_front();
        }
        delivered_ += out.size();
        return out;
    }

    void ScheduledTransport::deliver(std::size_t index)
    {
        if (index >= pool_.size())
        {
            throw std::out_of_range("no in-flight message at that index");
        }
        Message m = std::move(pool_[index]);
        if (index + 1 != pool_.size())
        {
            pool_[index] = std::move(pool_.back());
        }
        pool_.pop_back();
        intakes_[endpoint_slot(m.lp_receiver, num_lps_)].push_back(std::move(m));
    }

    bool ScheduledTransport::deliver_random(ParkMiller &rng)
    {
        if (pool_.empty())
        {
            return false;
        }
        deliver(rng.next_below(static_cast<std::uint32_t>(pool_.size())));
        return true;
    }

    void ScheduledTransport::deliver_all()
    {
        for (auto &m : pool_)
        {
            intakes_[endpoint_slot(m.lp_receiver, num_lps_)].push_back(std::move(m));
        }
        pool_.clear();
    }

    const std::deque<Message> &ScheduledTransport::intake(LpId id) const
    {
        return intakes_[endpoint_slot(id, num_lps_)];
    }
}
