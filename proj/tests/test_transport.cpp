#include "twsim/tcp_transport.hpp"
#include "twsim/transport.hpp"

#include <doctest.h>

#include <atomic>
#include <future>
#include <set>
#include <thread>

using namespace twsim;

namespace
{
    Message event(LpId from, LpId to, SeqNumber seq, double ts = 1.0)
    {
        Message m;
        m.kind = MessageKind::Event;
        m.lp_sender = from;
        m.lp_receiver = to;
        m.seq_number = seq;
        m.timestamp = Timestamp(ts);
        m.payload = encode_payload({from, to, seq});
        return m;
    }

    std::vector<Message> drain(Transport &t, LpId me, std::size_t expected,
                               std::chrono::milliseconds patience = std::chrono::milliseconds(5000))
    {
        std::vector<Message> got;
        const auto deadline = std::chrono::steady_clock::now() + patience;
        while (got.size() < expected && std::chrono::steady_clock::now() < deadline)
        {
            auto batch = t.receive_batch(me, 64);
            if (batch.empty())
            {
                std::this_thread::sleep_for(std::chrono::milliseconds(1));
            }
            got.insert(got.end(), batch.begin(), batch.end());
        }
        return got;
    }
}

TEST_CASE("in-process delivery")
{
    InProcTransport t(2);
    CHECK(t.receive_batch(1, 8).empty());
    const auto m = event(0, 1, 3);
    t.send(m);
    const auto got = t.receive_batch(1, 8);
    REQUIRE(got.size() == 1);
    CHECK(got[0] == m);
    CHECK(t.receive_batch(0, 8).empty());
}

TEST_CASE("batches respect max")
{
    InProcTransport t(2);
    for (int i = 0; i < 3; ++i)
    {
        t.send(event(0, 1, i));
    }
    CHECK(t.receive_batch(1, 2).size() == 2);
    CHECK(t.pending(1) == 1);
    CHECK(t.receive_batch(1, 2).size() == 1);
    CHECK_THROWS_AS(t.receive_batch(1, 0), std::invalid_argument);
}

TEST_CASE("unknown endpoints are rejected")
{
    InProcTransport t(2);
    CHECK_THROWS_AS(t.send(event(0, 99, 0)), UnknownEndpoint);
    CHECK_THROWS_AS(t.receive_batch(2, 1), UnknownEndpoint);
    Message ctl = event(0, kControllerId, 0);
    CHECK_NOTHROW(t.send(ctl));
    CHECK(t.receive_batch(kControllerId, 4).size() == 1);
    ScheduledTransport s(2);
    CHECK_THROWS_AS(s.send(event(0, 99, 0)), UnknownEndpoint);
}

TEST_CASE("concurrent senders: every message delivered exactly once")
{
    constexpr int kSenders = 4, kReceivers = 3, kPerSender = 5000;
    InProcTransport t(kReceivers);
    std::vector<std::thread> senders;
    for (int s = 0; s < kSenders; ++s)
    {
        senders.emplace_back([&t, s] {
            for (int i = 0; i < kPerSender; ++i)
            {
                t.send(event(static_cast<LpId>(s), static_cast<LpId>(i % kReceivers), static_cast<SeqNumber>(i)));
            }
        });
    }
    std::vector<std::future<std::set<std::pair<LpId, SeqNumber>>>> receivers;
    for (LpId r = 0; r < kReceivers; ++r)
    {
        receivers.push_back(std::async(std::launch::async, [&t, r] {
            std::set<std::pair<LpId, SeqNumber>> seen;
            const std::size_t expected = kSenders * ((kPerSender - r + kReceivers - 1) / kReceivers);
            for (const auto &m : drain(t, r, expected))
            {
                REQUIRE(m.lp_receiver == r);
                REQUIRE(seen.emplace(m.lp_sender, m.seq_number).second);
            }
            return seen;
        }));
    }
    for (auto &s : senders)
    {
        s.join();
    }
    std::size_t total = 0;
    for (LpId r = 0; r < kReceivers; ++r)
    {
        total += receivers[r].get().size();
        CHECK(t.sent_to(r) == t.delivered_to(r));
    }
    CHECK(total == kSenders * kPerSender);
}

TEST_CASE("scheduled transport holds messages until delivered")
{
    ScheduledTransport t(2);
    t.send(event(0, 1, 0));
    t.send(event(0, 1, 1));
    t.send(event(1, 0, 0));
    CHECK(t.in_flight().size() == 3);
    CHECK(t.receive_batch(1, 8).empty());
    t.deliver(1);
    CHECK(t.intake(1).size() == 1);
    CHECK(t.intake(1).front().seq_number == 1);
    t.deliver_all();
    CHECK(t.in_flight().empty());
    CHECK(t.receive_batch(1, 8).size() == 2);
    CHECK(t.receive_batch(0, 8).size() == 1);
    CHECK(t.sent_total() == 3);
    CHECK(t.delivered_total() == 3);
    CHECK_THROWS_AS(t.deliver(0), std::out_of_range);

    ParkMiller rng(5);
    CHECK(!t.deliver_random(rng));
}

TEST_CASE("topology validation")
{
    Topology t;
    t.nodes = {{"a", "127.0.0.1", 1, 0, 1}, {"b", "127.0.0.1", 2, 2, 3}};
    CHECK_NOTHROW(t.validate(4));
    CHECK_THROWS_AS(t.validate(5), std::invalid_argument); // LP 4 unhosted
    CHECK_THROWS_AS(t.validate(3), std::invalid_argument); // LP 3 out of range
    CHECK(t.node_of(3) == 1);
    CHECK(t.node_of(kControllerId) == 0);
    CHECK_THROWS_AS(t.node_of(9), UnknownEndpoint);
    CHECK(t.find("b") == 1);
    CHECK(t.find("0") == 0);
    CHECK(t.find("127.0.0.1:2") == 1);
    CHECK_THROWS_AS(t.find("c"), std::invalid_argument);

    t.nodes[1].first_lp = 1;
    CHECK_THROWS_AS(t.validate(4), std::invalid_argument); // LP 1 twice
    t.nodes[1].first_lp = 2;
    t.controller_node = 2;
    CHECK_THROWS_AS(t.validate(4), std::invalid_argument);
}

namespace
{
    Topology two_nodes()
    {
        Topology t;
        t.nodes = {{"n0", "127.0.0.1", pick_free_port(), 0, 0}, {"n1", "127.0.0.1", pick_free_port(), 1, 2}};
        return t;
    }

    TcpOptions quick()
    {
        TcpOptions o;
        o.connect_timeout = std::chrono::milliseconds(5000);
        o.retry_base = std::chrono::milliseconds(5);
        return o;
    }
}

TEST_CASE("tcp delivery matches in-process delivery")
{
    const auto topo = two_nodes();
    TcpTransport a(topo, 0, 3, quick());
    TcpTransport b(topo, 1, 3, quick());
    auto started = std::async(std::launch::async, [&] { b.start(); });
    a.start();
    started.get();

    // Across nodes, both directions, including the controller endpoint.
    std::vector<Message> sent;
    for (int i = 0; i < 200; ++i)
    {
        auto m = event(0, 1 + i % 2, i, 0.25 * i);
        m.payload.resize(i % 17);
        sent.push_back(m);
        a.send(m);
    }
    auto got1 = drain(b, 1, 100);
    auto got2 = drain(b, 2, 100);
    REQUIRE(got1.size() == 100);
    REQUIRE(got2.size() == 100);
    std::size_t i1 = 0, i2 = 0;
    for (const auto &m : sent)
    {
        // One connection per pair keeps per-pair order.
        CHECK(m == (m.lp_receiver == 1 ? got1[i1++] : got2[i2++]));
    }

    auto back = make_ack(sent[0], true);
    b.send(back);
    Message report = event(2, kControllerId, 7);
    report.kind = MessageKind::GvtReport;
    report.timestamp = Timestamp::infinity();
    b.send(report);
    CHECK(drain(a, 0, 1) == std::vector<Message>{back});
    CHECK(drain(a, kControllerId, 1) == std::vector<Message>{report});

    // Local sends never hit the socket.
    const auto frames = b.frames_sent();
    b.send(event(1, 2, 99));
    CHECK(drain(b, 2, 1).size() == 1);
    CHECK(b.frames_sent() == frames);
    CHECK(b.frames_received() == 200);
    CHECK(a.frames_received() == 2);

    CHECK_THROWS_AS(a.send(event(0, 9, 0)), UnknownEndpoint);
    CHECK_THROWS_AS(a.receive_batch(1, 1), UnknownEndpoint);

    b.close();
    a.close();
    CHECK_NOTHROW(a.send(event(0, 1, 0))); // dropped after close
}

TEST_CASE("losing a peer surfaces as a transport error")
{
    const auto topo = two_nodes();
    TcpTransport a(topo, 0, 3, quick());
    auto b = std::make_unique<TcpTransport>(topo, 1, 3, quick());
    auto started = std::async(std::launch::async, [&] { b->start(); });
    a.start();
    started.get();
    b.reset(); // closes the socket and the listener

    bool failed = false;
    for (int i = 0; i < 2000 && !failed; ++i)
    {
        try
        {
            a.send(event(0, 1, i));
            std::this_thread::sleep_for(std::chrono::milliseconds(1));
        }
        catch (const TransportError &)
        {
            failed = true;
        }
    }
    CHECK(failed);
}

TEST_CASE("start times out when a peer never appears")
{
    const auto topo = two_nodes();
    TcpOptions o = quick();
    o.connect_timeout = std::chrono::milliseconds(300);
    TcpTransport a(topo, 0, 3, o);
    CHECK_THROWS_AS(a.start(), TransportError);
}
