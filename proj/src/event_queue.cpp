#include "twsim/event_queue.hpp"

#include <algorithm>
#include <stdexcept>

namespace twsim
{
    void EventQueue::insert(Message m)
    {
        if (m.kind != MessageKind::Event)
        {
            throw std::invalid_argument("event queue only holds events, got " + std::string(to_string(m.kind)));
        }
        auto &bucket = buckets_[m.timestamp];
        if (order_ == TieOrder::Fifo)
        {
            bucket.push_back(std::move(m));
        }
        else
        {
            const auto key = identity_of(m);
            auto pos = std::upper_bound(bucket.begin(), bucket.end(), key,
                                        [](const EventIdentity &k, const Message &e) { return k < identity_of(e); });
            bucket.insert(pos, std::move(m));
        }
        ++size_;
    }

    std::optional<Message> EventQueue::pop_min()
    {
        if (buckets_.empty())
        {
            return std::nullopt;
        }
        auto it = buckets_.begin();
        Message m = std::move(it->second.front());
        it->second.pop_front();
        if (it->second.empty())
        {
            buckets_.erase(it);
        }
        --size_;
        return m;
    }

    bool EventQueue::remove_matching(const Message &anti)
    {
        auto it = buckets_.find(anti.timestamp);
        if (it == buckets_.end())
        {
            return false;
        }
        auto &bucket = it->second;
        auto victim = std::find_if(bucket.begin(), bucket.end(), [&](const Message &e) { return annihilates(e, anti); });
        if (victim == bucket.end())
        {
            return false;
        }
        bucket.erase(victim);
        if (bucket.empty())
        {
            buckets_.erase(it);
        }
        --size_;
        return true;
    }

    std::optional<Timestamp> EventQueue::min_timestamp() const
    {
        if (buckets_.empty())
        {
            return std::nullopt;
        }
        return buckets_.begin()->first;
    }

    const Message *EventQueue::peek_min() const
    {
        if (buckets_.empty())
        {
            return nullptr;
        }
        return &buckets_.begin()->second.front();
    }
}
