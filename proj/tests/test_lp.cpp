#include "twsim/logical_process.hpp"
#include "twsim/phold.hpp"
#include "twsim/transport.hpp"

#include <doctest.h>

#include <algorithm>

using namespace twsim;

namespace
{
    // Scripted model. The payload value says what an event emits:
    // bits 32.. hold target+1 (0 means nothing), bits 0..31 the delay.
    struct ScriptModel
    {
        struct EntityState
        {
            std::int64_t sum = 0;
            std::uint32_t count = 0;

            friend bool operator==(const EntityState &, const EntityState &) = default;
        };

        struct SharedState
        {
            std::uint64_t executed = 0;

            friend bool operator==(const SharedState &, const SharedState &) = default;
        };

        std::uint32_t entities = 2;

        std::uint32_t num_entities() const { return entities; }
        SharedState init_shared(LpId) const { return {}; }
        EntityState init_entity(EntityId) const { return {}; }
        void initial_events(SharedState &, EntityState &, EntityId, Emitter &) const {}

        EntityId receiver_of(std::span<const std::byte> payload) const
        {
            return decode_phold_payload(payload).entity_receiver;
        }

        void handle_event(SharedState &shared, EntityState &entity, EntityId self, std::span<const std::byte> payload,
                          Timestamp ts, Emitter &emit) const
        {
            const auto p = decode_phold_payload(payload);
            ++shared.executed;
            ++entity.count;
            entity.sum = entity.sum * 31 + static_cast<std::int64_t>(ts.value() * 8);
            if (const auto target = p.value >> 32; target != 0)
            {
                const auto delay = static_cast<double>(p.value & 0xFFFFFFFFu);
                emit.emit(static_cast<EntityId>(target - 1), Timestamp(ts.value() + delay),
                          encode_payload({self, static_cast<EntityId>(target - 1), 0}));
            }
        }

        std::uint64_t terminate(const SharedState &shared, std::span<const EntityState>) const { return shared.executed; }
    };

    static_assert(SimulationModel<ScriptModel>);

    using Lp = LogicalProcess<ScriptModel>;

    std::uint64_t forward(EntityId target, std::uint32_t delay)
    {
        return (std::uint64_t{target + 1} << 32) | delay;
    }

    // Event from LP `from` for entity `to` (entity e lives on LP e).
    Message event(LpId from, EntityId to, SeqNumber seq, double ts, std::uint64_t value = 0)
    {
        Message m;
        m.kind = MessageKind::Event;
        m.lp_sender = from;
        m.lp_receiver = to;
        m.seq_number = seq;
        m.timestamp = Timestamp(ts);
        m.payload = encode_payload({from, to, value});
        return m;
    }

    struct Fixture
    {
        ScriptModel model;
        EntityMap map{2, 2};
        ScheduledTransport transport{2};
        Lp lp0{0, model, map, transport};

        // Hands `m` straight to LP 0.
        void feed(Message m)
        {
            transport.send(std::move(m));
            transport.deliver(transport.in_flight().size() - 1);
            lp0.drain_transport();
        }

        std::vector<Message> in_flight(MessageKind kind) const
        {
            std::vector<Message> out;
            for (const auto &m : transport.in_flight())
            {
                if (m.kind == kind)
                {
                    out.push_back(m);
                }
            }
            return out;
        }

        // Acks LP 0's outstanding sends as LP 1 would, unmarked.
        void ack_everything()
        {
            std::vector<Message> acks;
            for (const auto &m : transport.in_flight())
            {
                if ((m.kind == MessageKind::Event || m.kind == MessageKind::Antimessage) && m.lp_sender == 0 &&
                    m.lp_receiver == 1)
                {
                    acks.push_back(make_ack(m, false));
                }
            }
            for (auto &a : acks)
            {
                feed(std::move(a));
            }
        }
    };

    std::vector<double> history_times(const Lp &lp)
    {
        std::vector<double> out;
        for (const auto &h : lp.history())
        {
            out.push_back(h.timestamp.value());
        }
        return out;
    }
}

TEST_CASE("an arriving event is queued and acknowledged")
{
    Fixture f;
    f.feed(event(1, 0, 0, 3.0));
    CHECK(f.lp0.inbox().size() == 1);
    CHECK(f.lp0.lvt() == Timestamp(0.0));
    const auto acks = f.in_flight(MessageKind::Ack);
    REQUIRE(acks.size() == 1);
    CHECK(acks[0].lp_receiver == 1);
    CHECK(acks[0].seq_number == 0);
    CHECK(acks[0].timestamp == Timestamp(3.0));
}

TEST_CASE("an antimessage for an unprocessed event annihilates it")
{
    Fixture f;
    const auto e = event(1, 0, 4, 3.0);
    f.feed(e);
    f.feed(event(1, 0, 5, 6.0));
    f.feed(make_antimessage(e));
    CHECK(f.lp0.inbox().size() == 1);
    CHECK(f.lp0.inbox().min_timestamp() == Timestamp(6.0));
    CHECK(f.lp0.rollbacks() == 0);
    CHECK(f.in_flight(MessageKind::Ack).size() == 3);
}

TEST_CASE("acks clear the matching unacknowledged send")
{
    Fixture f;
    for (int i = 0; i < 6; ++i)
    {
        f.feed(event(1, 0, i, 1.0 + i, forward(1, 10)));
    }
    for (int i = 0; i < 6; ++i)
    {
        REQUIRE(f.lp0.step());
    }
    CHECK(f.lp0.to_ack_messages().size() == 6);
    const auto sent = f.in_flight(MessageKind::Event);
    const auto it = std::find_if(sent.begin(), sent.end(), [](const Message &m) { return m.seq_number == 5; });
    REQUIRE(it != sent.end());
    f.feed(make_ack(*it, false));
    CHECK(f.lp0.to_ack_messages().size() == 5);
    CHECK(!f.lp0.to_ack_messages().contains({it->timestamp, 5}));

    // An ack nobody is waiting for is a protocol violation.
    CHECK_THROWS_AS(f.feed(make_ack(*it, false)), ProtocolError);
}

TEST_CASE("step executes the lowest event")
{
    Fixture f;
    CHECK(!f.lp0.step());
    f.feed(event(1, 0, 0, 5.0, forward(1, 2)));
    REQUIRE(f.lp0.step());
    CHECK(f.lp0.lvt() == Timestamp(5.0));
    CHECK(f.lp0.history().size() == 1);
    const auto sent = f.in_flight(MessageKind::Event);
    REQUIRE(sent.size() == 1);
    CHECK(sent[0].timestamp == Timestamp(7.0));
    CHECK(sent[0].lp_receiver == 1);
    CHECK(f.lp0.to_ack_messages().size() == 1);
    CHECK(f.lp0.proc_messages().size() == 1);
    CHECK(!f.lp0.step());
}

TEST_CASE("a straggler triggers a rollback")
{
    Fixture f;
    f.feed(event(1, 0, 0, 10.0));
    f.lp0.step();
    REQUIRE(f.lp0.lvt() == Timestamp(10.0));
    f.feed(event(1, 0, 1, 8.0));
    REQUIRE(f.lp0.step());
    CHECK(f.lp0.rollbacks() == 1);
    CHECK(f.lp0.history().empty());
    CHECK(f.lp0.inbox().size() == 2);
    // Then both run in order.
    f.lp0.step();
    f.lp0.step();
    CHECK(history_times(f.lp0) == std::vector<double>{8.0, 10.0});
}

TEST_CASE("rollback hand trace")
{
    Fixture f;
    // a at 0, b at 4, c at 9; every one forwards to LP 1.
    f.feed(event(1, 0, 0, 0.0, forward(1, 1)));
    f.feed(event(1, 0, 1, 4.0, forward(1, 1)));
    f.feed(event(1, 0, 2, 9.0, forward(1, 1)));
    f.lp0.step();
    f.lp0.step();
    const auto s2 = f.lp0.entity_states()[0];
    const auto shared2 = f.lp0.shared_state();
    f.lp0.step();
    REQUIRE(history_times(f.lp0) == std::vector<double>{0.0, 4.0, 9.0});
    const auto sent_before = f.in_flight(MessageKind::Event);
    REQUIRE(sent_before.size() == 3);

    SUBCASE("straggler between b and c")
    {
        f.lp0.rollback(Timestamp(5.0));
        CHECK(f.lp0.rollbacks() == 1);
        CHECK(history_times(f.lp0) == std::vector<double>{0.0, 4.0});
        CHECK(f.lp0.entity_states()[0] == s2);
        CHECK(f.lp0.shared_state() == shared2);
        CHECK(f.lp0.lvt() == Timestamp(4.0));
        REQUIRE(f.lp0.inbox().size() == 1);
        CHECK(f.lp0.inbox().peek_min()->seq_number == 2);

        const auto antis = f.in_flight(MessageKind::Antimessage);
        REQUIRE(antis.size() == 1);
        CHECK(antis[0].timestamp == Timestamp(10.0));
        CHECK(annihilates(antis[0], sent_before[2]));
        // The antimessage is outstanding until acknowledged as well.
        CHECK(f.lp0.to_ack_messages().size() == 4);
    }

    SUBCASE("straggler equal to a processed timestamp")
    {
        f.lp0.rollback(Timestamp(4.0));
        CHECK(history_times(f.lp0) == std::vector<double>{0.0});
        CHECK(f.lp0.inbox().size() == 2);
        CHECK(f.in_flight(MessageKind::Antimessage).size() == 2);
        CHECK(f.lp0.lvt() == Timestamp(0.0));
    }

    SUBCASE("straggler past every processed event is a no-op")
    {
        f.lp0.rollback(Timestamp(9.5));
        CHECK(f.lp0.rollbacks() == 0);
        CHECK(f.lp0.history().size() == 3);
        CHECK(f.in_flight(MessageKind::Antimessage).empty());
    }

    SUBCASE("undoing everything restores the initial state")
    {
        f.lp0.rollback(Timestamp(0.0));
        CHECK(f.lp0.entity_states()[0] == ScriptModel::EntityState{});
        CHECK(f.lp0.shared_state() == ScriptModel::SharedState{});
        CHECK(f.lp0.inbox().size() == 3);
        CHECK(f.lp0.proc_messages().empty());
        CHECK(f.lp0.lvt() == Timestamp(0.0));
    }
}

TEST_CASE("re-execution after rollback reproduces the same sends")
{
    Fixture f;
    f.feed(event(1, 0, 0, 1.0, forward(1, 3)));
    f.feed(event(1, 0, 1, 2.0, forward(1, 3)));
    f.lp0.step();
    f.lp0.step();
    const auto first = f.in_flight(MessageKind::Event);
    const auto state = f.lp0.entity_states()[0];
    f.lp0.rollback(Timestamp(1.0));
    f.lp0.step();
    f.lp0.step();
    CHECK(f.lp0.entity_states()[0] == state);
    const auto all = f.in_flight(MessageKind::Event);
    REQUIRE(all.size() == 4);
    // Same timestamps and payloads, fresh sequence numbers.
    CHECK(all[2].timestamp == first[0].timestamp);
    CHECK(all[2].payload == first[0].payload);
    CHECK(all[2].seq_number != first[0].seq_number);
}

TEST_CASE("antimessage for a processed event")
{
    Fixture f;
    const auto victim = event(1, 0, 0, 9.0);
    f.feed(victim);
    f.feed(event(1, 0, 1, 12.0));
    f.lp0.step();
    f.lp0.step();
    REQUIRE(f.lp0.lvt() == Timestamp(12.0));

    f.feed(make_antimessage(victim));
    CHECK(f.lp0.rollbacks() == 1);
    CHECK(f.lp0.history().empty());
    REQUIRE(f.lp0.inbox().size() == 1);
    CHECK(f.lp0.inbox().peek_min()->timestamp == Timestamp(12.0));
    f.lp0.step();
    CHECK(history_times(f.lp0) == std::vector<double>{12.0});
    CHECK(!f.lp0.step());
}

TEST_CASE("antimessage ahead of its event is buffered")
{
    Fixture f;
    const auto e = event(1, 0, 3, 7.0);
    f.feed(make_antimessage(e));
    CHECK(f.lp0.anti_messages().size() == 1);
    CHECK(f.lp0.local_min() == Timestamp(7.0));
    f.feed(e);
    CHECK(f.lp0.anti_messages().empty());
    CHECK(f.lp0.inbox().empty());
    CHECK(f.in_flight(MessageKind::Ack).size() == 2);
}

TEST_CASE("self-sends stay local and their children are cancelled on rollback")
{
    Fixture f;
    f.feed(event(1, 0, 0, 1.0, forward(0, 1)));
    f.lp0.step();
    // The child sits in the inbox and never touched the transport.
    CHECK(f.lp0.inbox().size() == 1);
    CHECK(f.lp0.inbox().min_timestamp() == Timestamp(2.0));
    CHECK(f.in_flight(MessageKind::Event).empty());
    CHECK(f.lp0.to_ack_messages().empty());

    f.feed(event(1, 0, 1, 0.5));
    f.lp0.step();
    CHECK(f.lp0.rollbacks() == 1);
    // Straggler re-queued alongside the undone parent; the child is gone.
    CHECK(f.lp0.inbox().size() == 2);
    CHECK(f.lp0.inbox().min_timestamp() == Timestamp(0.5));
    CHECK(f.in_flight(MessageKind::Antimessage).empty());
}

TEST_CASE("fossil collection")
{
    Fixture f;
    for (double t : {1.0, 2.0, 8.0})
    {
        f.feed(event(1, 0, static_cast<SeqNumber>(t), t));
    }
    f.lp0.step();
    f.lp0.step();
    f.lp0.step();

    SUBCASE("threshold")
    {
        f.lp0.fossil_collect(Timestamp(5.0));
        CHECK(history_times(f.lp0) == std::vector<double>{8.0});
        REQUIRE(f.lp0.restoration_base());
        CHECK(f.lp0.restoration_base()->timestamp == Timestamp(2.0));
        CHECK(f.lp0.gvt() == Timestamp(5.0));
        CHECK(f.lp0.proc_messages().size() == 1);
        CHECK_THROWS_AS(f.lp0.rollback(Timestamp(4.0)), ProtocolError);
        CHECK_THROWS_AS(f.lp0.fossil_collect(Timestamp(4.0)), ProtocolError);
    }

    SUBCASE("zero keeps everything")
    {
        f.lp0.fossil_collect(Timestamp(0.0));
        CHECK(f.lp0.history().size() == 3);
        CHECK(!f.lp0.restoration_base());
    }

    SUBCASE("beyond everything keeps only the base")
    {
        f.lp0.fossil_collect(Timestamp(100.0));
        CHECK(f.lp0.history().empty());
        REQUIRE(f.lp0.restoration_base());
        CHECK(f.lp0.restoration_base()->timestamp == Timestamp(8.0));
        CHECK(f.lp0.lvt() == Timestamp(8.0));
    }
}

TEST_CASE("events below GVT are rejected")
{
    Fixture f;
    f.lp0.fossil_collect(Timestamp(5.0));
    CHECK_THROWS_AS(f.feed(event(1, 0, 0, 4.0)), ProtocolError);
}

TEST_CASE("local minimum")
{
    Fixture f;
    CHECK(f.lp0.local_min() == Timestamp::infinity());

    f.feed(event(1, 0, 0, 10.0));
    f.lp0.step();
    f.feed(event(1, 0, 1, 7.0));
    // LVT 10, inbox min 7.
    CHECK(f.lp0.local_min() == Timestamp(7.0));

    // LVT 10, nothing pending, one unacknowledged send at 6.
    Fixture g;
    g.feed(event(1, 0, 0, 5.0, forward(1, 1)));
    g.feed(event(1, 0, 1, 10.0));
    g.lp0.step();
    g.lp0.step();
    REQUIRE(g.lp0.lvt() == Timestamp(10.0));
    CHECK(g.lp0.local_min() == Timestamp(6.0));
    g.ack_everything();
    CHECK(g.lp0.local_min() == Timestamp::infinity());
}

TEST_CASE("find mode marks acks and marked acks lower the next report")
{
    Fixture f;
    Lp lp1(1, f.model, f.map, f.transport);
    const auto to_lp = [&](LpId who) {
        for (std::size_t i = f.transport.in_flight().size(); i-- > 0;)
        {
            // Plain acks for the fixture's fake sends are dropped.
            const auto &m = f.transport.in_flight()[i];
            if (m.lp_receiver == who && m.kind != MessageKind::Ack)
            {
                f.transport.deliver(i);
            }
        }
    };

    // LP 0 sends an event at 6 to LP 1.
    f.feed(event(1, 0, 0, 5.0, forward(1, 1)));
    f.lp0.step();

    Message request;
    request.kind = MessageKind::GvtRequest;
    request.lp_sender = kControllerId;
    request.seq_number = 1;

    // LP 1 reports first, then receives the event: its ack is marked.
    request.lp_receiver = 1;
    f.transport.send(request);
    to_lp(1);
    lp1.drain_transport();
    CHECK(lp1.find_mode());
    CHECK(lp1.inbox().size() == 1);
    const auto acks = f.in_flight(MessageKind::MarkedAck);
    REQUIRE(acks.size() == 1);

    // LP 0 takes the marked ack before its own report.
    to_lp(0);
    f.lp0.drain_transport();
    CHECK(f.lp0.to_ack_messages().empty());
    CHECK(f.lp0.marked_min() == Timestamp(6.0));
    request.lp_receiver = 0;
    f.transport.send(request);
    to_lp(0);
    f.lp0.drain_transport();
    CHECK(!f.lp0.marked_min());
    const auto reports = f.in_flight(MessageKind::GvtReport);
    REQUIRE(reports.size() == 2);
    // LP 1 had nothing when it reported; LP 0 covers the event at 6
    // through the marked ack, so the minimum is still right.
    for (const auto &r : reports)
    {
        CHECK(r.timestamp == (r.lp_sender == 0 ? Timestamp(6.0) : Timestamp::infinity()));
    }

    // The broadcast for the round ends find mode; stale ones do not.
    Message stale;
    stale.kind = MessageKind::GvtBroadcast;
    stale.lp_sender = kControllerId;
    stale.lp_receiver = 1;
    stale.seq_number = 0;
    stale.timestamp = Timestamp(0.0);
    lp1.receive(stale);
    CHECK(lp1.find_mode());
    Message bcast = stale;
    bcast.seq_number = 1;
    bcast.timestamp = Timestamp(6.0);
    lp1.receive(bcast);
    CHECK(!lp1.find_mode());
    CHECK(lp1.gvt() == Timestamp(6.0));
    // An older broadcast arriving late never lowers GVT.
    lp1.receive(stale);
    CHECK(lp1.gvt() == Timestamp(6.0));
}

TEST_CASE("events at or past end_time are never executed")
{
    ScriptModel model;
    EntityMap map(2, 2);
    ScheduledTransport transport(2);
    LpOptions opts;
    opts.end_time = Timestamp(10.0);
    opts.record_trace = true;
    Lp lp(0, model, map, transport, opts);
    transport.send(event(1, 0, 0, 3.0));
    transport.send(event(1, 0, 1, 10.0));
    transport.deliver_all();
    lp.drain_transport();
    CHECK(lp.step());
    CHECK(!lp.step());
    CHECK(lp.inbox().size() == 1);

    Message stop;
    stop.kind = MessageKind::Stop;
    stop.lp_sender = kControllerId;
    stop.lp_receiver = 0;
    stop.timestamp = Timestamp(10.0);
    lp.receive(stop);
    CHECK(lp.status() == LpStatus::Terminating);
    CHECK(lp.history().empty());

    std::vector<Message> finished;
    for (const auto &m : transport.in_flight())
    {
        if (m.kind == MessageKind::LpFinished)
        {
            finished.push_back(m);
        }
    }
    REQUIRE(finished.size() == 1);
    const auto report = decode_report(finished[0].payload);
    CHECK(report.lp == 0);
    CHECK(report.events_committed == 1);
    CHECK(report.summary == 1);
    REQUIRE(report.trace.size() == 1);
    CHECK(report.trace[0].timestamp == Timestamp(3.0));
    CHECK(report.trace[0].entity == 0);

    // Anything after termination is ignored.
    lp.receive(event(1, 0, 2, 4.0));
    CHECK(lp.inbox().size() == 1);
    CHECK(!lp.step());
}

TEST_CASE("bootstrap sends the model's initial events")
{
    PholdConfig cfg;
    cfg.entities = 8;
    cfg.lps = 2;
    cfg.rho = 1.0;
    const PholdModel model(cfg);
    const EntityMap map(8, 2);
    ScheduledTransport transport(2);
    LogicalProcess<PholdModel> lp0(0, model, map, transport);
    LogicalProcess<PholdModel> lp1(1, model, map, transport);
    lp0.bootstrap();
    lp1.bootstrap();
    transport.deliver_all();
    lp0.drain_transport();
    lp1.drain_transport();

    // The same messages init_events predicts, split between inboxes and
    // the other LP's intake.
    std::vector<Message> got;
    for (const auto *lp : {&lp0, &lp1})
    {
        for (const auto &[ts, bucket] : lp->inbox().buckets())
        {
            got.insert(got.end(), bucket.begin(), bucket.end());
        }
    }
    auto expected = init_events(cfg);
    const auto key = [](const Message &a, const Message &b) {
        return std::tie(a.lp_sender, a.seq_number) < std::tie(b.lp_sender, b.seq_number);
    };
    std::sort(got.begin(), got.end(), key);
    std::sort(expected.begin(), expected.end(), key);
    CHECK(got == expected);
}

TEST_CASE("a shutdown message aborts the LP")
{
    Fixture f;
    Message m;
    m.kind = MessageKind::Shutdown;
    m.lp_sender = kControllerId;
    m.lp_receiver = 0;
    const std::string why = "node 2 lost";
    for (char c : why)
    {
        m.payload.push_back(static_cast<std::byte>(c));
    }
    CHECK_THROWS_WITH_AS(f.lp0.receive(m), "node 2 lost", RemoteAbort);
}

TEST_CASE("invalid construction")
{
    ScriptModel model;
    EntityMap map(2, 2);
    ScheduledTransport transport(2);
    LpOptions opts;
    opts.max_received_messages = 0;
    CHECK_THROWS_AS(Lp(0, model, map, transport, opts), std::invalid_argument);
}
