#include "twsim/event_queue.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace twsim;

namespace
{
    Message event(LpId from, SeqNumber seq, double ts)
    {
        Message m;
        m.kind = MessageKind::Event;
        m.lp_sender = from;
        m.lp_receiver = 0;
        m.seq_number = seq;
        m.timestamp = Timestamp(ts);
        return m;
    }
}

TEST_CASE("insert keeps the minimum bucket in front")
{
    EventQueue q;
    q.insert(event(0, 1, 5.0));
    q.insert(event(0, 2, 3.0));
    CHECK(q.min_timestamp() == Timestamp(3.0));
    CHECK(q.size() == 2);
}

TEST_CASE("simultaneous events keep arrival order")
{
    EventQueue q;
    const auto e1 = event(1, 9, 3.0);
    const auto e2 = event(0, 1, 3.0);
    q.insert(e1);
    q.insert(e2);
    REQUIRE(q.buckets().size() == 1);
    const auto &bucket = q.buckets().at(Timestamp(3.0));
    REQUIRE(bucket.size() == 2);
    CHECK(bucket[0] == e1);
    CHECK(bucket[1] == e2);
    CHECK(*q.pop_min() == e1);
    CHECK(*q.pop_min() == e2);
}

TEST_CASE("sender-sequence order sorts simultaneous events by identity")
{
    EventQueue q(EventQueue::TieOrder::SenderSequence);
    q.insert(event(1, 0, 3.0));
    q.insert(event(0, 5, 3.0));
    q.insert(event(0, 2, 3.0));
    CHECK(q.pop_min()->seq_number == 2);
    CHECK(q.pop_min()->seq_number == 5);
    CHECK(q.pop_min()->lp_sender == 1);
}

TEST_CASE("insert rejects non-events")
{
    EventQueue q;
    auto ack = event(0, 1, 1.0);
    ack.kind = MessageKind::Ack;
    CHECK_THROWS_AS(q.insert(ack), std::invalid_argument);
    CHECK_THROWS_AS(q.insert(make_antimessage(event(0, 1, 1.0))), std::invalid_argument);
    CHECK(q.empty());
}

TEST_CASE("pop_min")
{
    EventQueue q;
    CHECK(!q.pop_min());
    const auto e1 = event(0, 1, 5.0);
    const auto e2 = event(0, 2, 3.0);
    q.insert(e1);
    q.insert(e2);
    CHECK(*q.pop_min() == e2);
    CHECK(q.min_timestamp() == Timestamp(5.0));
    CHECK(q.size() == 1);
    CHECK(*q.pop_min() == e1);
    CHECK(!q.min_timestamp());
    CHECK(q.buckets().empty());
}

TEST_CASE("remove_matching")
{
    EventQueue q;
    CHECK(!q.remove_matching(make_antimessage(event(0, 7, 10.0))));

    q.insert(event(0, 7, 10.0));
    CHECK(q.remove_matching(make_antimessage(event(0, 7, 10.0))));
    CHECK(q.empty());
    CHECK(q.buckets().empty());

    q.insert(event(0, 8, 10.0));
    const auto before = q;
    CHECK(!q.remove_matching(make_antimessage(event(0, 7, 10.0))));
    CHECK(q == before);
}

TEST_CASE("random insert/pop interleavings agree with a sorted-list oracle")
{
    std::mt19937_64 gen(2024);
    for (int round = 0; round < 50; ++round)
    {
        EventQueue q;
        std::vector<Message> oracle; // arrival order
        SeqNumber seq = 0;
        std::vector<double> drained;
        for (int op = 0; op < 400; ++op)
        {
            if (gen() % 3 != 0 || oracle.empty())
            {
                // Few distinct timestamps so buckets fill up.
                auto m = event(0, seq++, static_cast<double>(gen() % 20));
                oracle.push_back(m);
                q.insert(m);
            }
            else
            {
                // Lowest timestamp, earliest arrival.
                auto it = std::min_element(oracle.begin(), oracle.end(), [](const Message &a, const Message &b) {
                    return a.timestamp < b.timestamp;
                });
                const auto got = q.pop_min();
                REQUIRE(got);
                CHECK(*got == *it);
                oracle.erase(it);
            }
            CHECK(q.size() == oracle.size());
        }
        while (auto m = q.pop_min())
        {
            drained.push_back(m->timestamp.value());
        }
        CHECK(std::is_sorted(drained.begin(), drained.end()));
        CHECK(drained.size() == oracle.size());
    }
}
