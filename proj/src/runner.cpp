#include "twsim/runner.hpp"

#include "twsim/errors.hpp"
#include "twsim/logical_process.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>
#include <tuple>

namespace twsim
{
    namespace
    {
        using Lp = LogicalProcess<PholdModel>;
        using Clock = std::chrono::steady_clock;

        double seconds_since(Clock::time_point start)
        {
            return std::chrono::duration<double>(Clock::now() - start).count();
        }

        LpOptions lp_options(const PholdConfig &cfg, std::size_t max_received, bool record_trace)
        {
            LpOptions o;
            o.max_received_messages = max_received;
            o.end_time = cfg.end_time;
            o.record_trace = record_trace;
            return o;
        }

        std::vector<std::unique_ptr<Lp>> make_lps(const PholdModel &model, const EntityMap &map, Transport &transport,
                                                  LpId first, LpId last, const LpOptions &opts)
        {
            std::vector<std::unique_ptr<Lp>> lps;
            for (LpId id = first; id <= last; ++id)
            {
                lps.push_back(std::make_unique<Lp>(id, model, map, transport, opts));
            }
            return lps;
        }

        Payload text_payload(const std::string &s)
        {
            Payload p(s.size());
            std::transform(s.begin(), s.end(), p.begin(), [](char c) { return static_cast<std::byte>(c); });
            return p;
        }

        std::string payload_text(const Payload &p)
        {
            return std::string(reinterpret_cast<const char *>(p.data()), p.size());
        }

        Message control(MessageKind kind, LpId from, LpId to, std::string text = {})
        {
            Message m;
            m.kind = kind;
            m.lp_sender = from;
            m.lp_receiver = to;
            m.payload = text_payload(text);
            return m;
        }

        // First failure wins; everyone else just stops.
        class AbortFlag
        {
        public:
            void fail(std::string what)
            {
                std::lock_guard lock(mu_);
                if (!what_)
                {
                    what_ = std::move(what);
                }
                raised_.store(true);
            }

            bool raised() const noexcept { return raised_.load(); }

            std::string what() const
            {
                std::lock_guard lock(mu_);
                return what_.value_or("");
            }

        private:
            mutable std::mutex mu_;
            std::optional<std::string> what_;
            std::atomic<bool> raised_{false};
        };

        class Backoff
        {
        public:
            void reset() noexcept { idle_ = 0; }

            void wait()
            {
                if (++idle_ < 32)
                {
                    std::this_thread::yield();
                }
                else
                {
                    std::this_thread::sleep_for(std::chrono::microseconds(50));
                }
            }

        private:
            unsigned idle_ = 0;
        };

        std::string lp_failure(LpId id, const char *phase, const std::exception &e)
        {
            return "LP " + std::to_string(id) + " failed during " + phase + ": " + e.what();
        }

        void bootstrap_all(std::vector<std::unique_ptr<Lp>> &lps)
        {
            for (auto &lp : lps)
            {
                try
                {
                    lp->bootstrap();
                }
                catch (const std::exception &e)
                {
                    throw RunError(lp_failure(lp->id(), "bootstrap", e));
                }
            }
        }

        std::vector<std::thread> launch(std::vector<std::unique_ptr<Lp>> &lps, AbortFlag &abort)
        {
            std::vector<std::thread> threads;
            for (auto &lp : lps)
            {
                threads.emplace_back([&abort, p = lp.get()] {
                    Backoff backoff;
                    try
                    {
                        while (!abort.raised() && p->status() == LpStatus::Running)
                        {
                            if (p->poll())
                            {
                                backoff.reset();
                            }
                            else
                            {
                                backoff.wait();
                            }
                        }
                    }
                    catch (const std::exception &e)
                    {
                        abort.fail(lp_failure(p->id(), "simulation", e));
                    }
                });
            }
            return threads;
        }

        void join_all(std::vector<std::thread> &threads)
        {
            for (auto &t : threads)
            {
                if (t.joinable())
                {
                    t.join();
                }
            }
        }

        // Drives a GvtController over a transport with wall-clock round pacing.
        class ControllerLoop
        {
        public:
            ControllerLoop(std::uint32_t num_lps, Timestamp end_time, Transport &transport, double period,
                           std::size_t nodes)
                : controller_(num_lps, end_time),
                  transport_(&transport),
                  period_(std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(period))),
                  next_round_(Clock::now() + period_),
                  waiting_nodes_(nodes - 1)
            {
            }

            // Handles pending controller mail and starts a round when due.
            // True if anything happened.
            bool pump()
            {
                bool busy = false;
                for (auto &m : transport_->receive_batch(kControllerId, 256))
                {
                    busy = true;
                    handle(m);
                }
                if (waiting_nodes_ == 0 && !controller_.round_active() && !controller_.stopped() &&
                    Clock::now() >= next_round_)
                {
                    for (auto &req : controller_.start_round())
                    {
                        transport_->send(std::move(req));
                    }
                    busy = true;
                }
                return busy;
            }

            const GvtController &controller() const noexcept { return controller_; }
            bool done() const noexcept { return controller_.all_finished(); }

        private:
            void handle(const Message &m)
            {
                switch (m.kind)
                {
                case MessageKind::GvtReport:
                    if (auto out = controller_.on_report(m))
                    {
                        for (auto &msg : *out)
                        {
                            transport_->send(std::move(msg));
                        }
                        next_round_ = Clock::now() + period_;
                    }
                    break;
                case MessageKind::LpFinished:
                    controller_.on_finished(m);
                    break;
                case MessageKind::NodeReady:
                    if (waiting_nodes_ == 0)
                    {
                        throw ProtocolError("unexpected node ready message from LP " + std::to_string(m.lp_sender));
                    }
                    --waiting_nodes_;
                    break;
                case MessageKind::Shutdown:
                    throw RemoteAbort("node hosting LP " + std::to_string(m.lp_sender) + " aborted: " + payload_text(m.payload));
                default:
                    throw ProtocolError("controller cannot handle " + describe(m));
                }
            }

            GvtController controller_;
            Transport *transport_;
            Clock::duration period_;
            Clock::time_point next_round_;
            std::size_t waiting_nodes_;
        };

        std::string controller_failure(const ControllerLoop &loop, const std::exception &e)
        {
            return "controller failed during GVT round " + std::to_string(loop.controller().round()) + ": " + e.what();
        }

        void check_exec(const ExecOptions &opts)
        {
            if (!(opts.gvt_period > 0.0))
            {
                throw std::invalid_argument("gvt_period must be positive");
            }
            if (opts.max_received_messages == 0)
            {
                throw std::invalid_argument("max_received_messages must be at least 1");
            }
        }
    }

    Backend parse_backend(std::string_view name)
    {
        if (name == "inproc")
        {
            return Backend::InProc;
        }
        if (name == "tcp")
        {
            return Backend::Tcp;
        }
        throw std::invalid_argument("unknown backend '" + std::string(name) + "' (expected inproc or tcp)");
    }

    std::string_view to_string(Backend b) noexcept
    {
        return b == Backend::Tcp ? "tcp" : "inproc";
    }

    ExecOptions exec_options(const RunConfig &cfg)
    {
        ExecOptions o;
        o.gvt_period = cfg.gvt_period;
        o.max_received_messages = cfg.max_received_messages;
        o.record_trace = cfg.record_trace;
        o.connect_timeout = std::chrono::milliseconds(static_cast<std::int64_t>(cfg.connect_timeout * 1000.0));
        return o;
    }

    RunMetrics collect_metrics(const PholdConfig &cfg, const GvtController &controller, double wall_clock_seconds)
    {
        if (!controller.all_finished())
        {
            throw std::logic_error("collect_metrics: not every LP has finished");
        }
        RunMetrics r;
        r.config = cfg;
        r.wall_clock_seconds = wall_clock_seconds;
        r.gvt_trace = controller.gvt_trace();
        r.lp_reports = controller.lp_reports();
        for (const auto &lp : r.lp_reports)
        {
            r.lp_rollbacks.push_back(lp.rollbacks);
            r.total_rollbacks += lp.rollbacks;
            r.events_committed += lp.events_committed;
            r.events_processed += lp.events_processed;
            r.events_rolled_back += lp.events_rolled_back;
            r.events_sent += lp.events_sent;
            r.remote_sends += lp.remote_sends;
            r.antimessages_sent += lp.antimessages_sent;
            r.committed_sends += lp.committed_sends;
            r.committed_remote_sends += lp.committed_remote_sends;
            r.peak_history = std::max(r.peak_history, lp.peak_history);
            r.summary += lp.summary;
            r.trace.insert(r.trace.end(), lp.trace.begin(), lp.trace.end());
        }
        canonicalize(r.trace);
        return r;
    }

    RunMetrics run_inproc(const PholdConfig &cfg, const ExecOptions &opts)
    {
        cfg.validate();
        check_exec(opts);
        const PholdModel model(cfg);
        const EntityMap map(cfg.entities, cfg.lps);
        InProcTransport transport(cfg.lps);
        auto lps = make_lps(model, map, transport, 0, cfg.lps - 1,
                            lp_options(cfg, opts.max_received_messages, opts.record_trace));
        ControllerLoop loop(cfg.lps, cfg.end_time, transport, opts.gvt_period, 1);

        const auto start = Clock::now();
        bootstrap_all(lps);
        AbortFlag abort;
        auto threads = launch(lps, abort);
        try
        {
            Backoff backoff;
            while (!abort.raised() && !loop.done())
            {
                if (loop.pump())
                {
                    backoff.reset();
                }
                else
                {
                    backoff.wait();
                }
            }
        }
        catch (const std::exception &e)
        {
            abort.fail(controller_failure(loop, e));
        }
        const double wall = seconds_since(start);
        join_all(threads);
        if (abort.raised())
        {
            throw RunError(abort.what());
        }
        return collect_metrics(cfg, loop.controller(), wall);
    }

    RunMetrics run_scheduled(const PholdConfig &cfg, const ScheduleOptions &opts)
    {
        cfg.validate();
        if (opts.max_received_messages == 0)
        {
            throw std::invalid_argument("max_received_messages must be at least 1");
        }
        const PholdModel model(cfg);
        const EntityMap map(cfg.entities, cfg.lps);
        ScheduledTransport transport(cfg.lps);
        auto lps = make_lps(model, map, transport, 0, cfg.lps - 1,
                            lp_options(cfg, opts.max_received_messages, opts.record_trace));
        GvtController controller(cfg.lps, cfg.end_time);
        ParkMiller pick(static_cast<std::int64_t>(1 + opts.schedule_seed % (ParkMiller::kModulus - 2)));

        const auto inspect = [&](std::uint64_t round, Timestamp gvt) {
            RoundSnapshot snap;
            snap.round = round;
            snap.gvt = gvt;
            snap.true_min = Timestamp::infinity();
            const auto count = [&](const Message &m) {
                if (m.kind == MessageKind::Event)
                {
                    ++snap.live_events;
                    snap.true_min = std::min(snap.true_min, m.timestamp);
                }
                else if (m.kind == MessageKind::Antimessage)
                {
                    --snap.live_events;
                    snap.true_min = std::min(snap.true_min, m.timestamp);
                }
            };
            for (const auto &lp : lps)
            {
                snap.live_events += static_cast<std::int64_t>(lp->inbox().size());
                if (auto t = lp->inbox().min_timestamp())
                {
                    snap.true_min = std::min(snap.true_min, *t);
                }
                for (const auto &[id, anti] : lp->anti_messages())
                {
                    --snap.live_events;
                    snap.true_min = std::min(snap.true_min, anti.timestamp);
                }
                for (const auto &m : transport.intake(lp->id()))
                {
                    count(m);
                }
            }
            for (const auto &m : transport.in_flight())
            {
                count(m);
            }
            opts.inspector(snap);
        };

        const auto pump_controller = [&] {
            for (auto &m : transport.receive_batch(kControllerId, opts.max_received_messages))
            {
                if (m.kind == MessageKind::GvtReport)
                {
                    if (auto out = controller.on_report(m))
                    {
                        if (opts.inspector)
                        {
                            inspect(controller.round(), controller.current_gvt());
                        }
                        for (auto &msg : *out)
                        {
                            transport.send(std::move(msg));
                        }
                    }
                }
                else if (m.kind == MessageKind::LpFinished)
                {
                    controller.on_finished(m);
                }
                else
                {
                    throw ProtocolError("controller cannot handle " + describe(m));
                }
            }
        };

        const auto start = Clock::now();
        bootstrap_all(lps);

        // Weights: deliver 4, LP drain 2, LP step 2, controller 1.
        constexpr std::uint64_t kActions = 9;
        constexpr std::uint64_t kStepLimit = 200'000'000;
        std::uint32_t since_round = 0;
        for (std::uint64_t steps = 0; !controller.all_finished(); ++steps)
        {
            if (steps == kStepLimit)
            {
                throw RunError("scheduled run did not terminate after " + std::to_string(kStepLimit) + " actions");
            }
            if (!controller.round_active() && !controller.stopped() && ++since_round >= opts.round_interval)
            {
                for (auto &req : controller.start_round())
                {
                    transport.send(std::move(req));
                }
                since_round = 0;
            }

            // Backlogs beyond max_in_flight are worked off first, otherwise
            // sends outpace deliveries and deliveries outpace intake.
            std::uint64_t action = pick.next_below(kActions);
            std::optional<std::size_t> backlogged;
            if (transport.in_flight().size() > opts.max_in_flight)
            {
                action = 0;
            }
            else
            {
                std::size_t backlog = 0, largest = 0;
                for (std::size_t i = 0; i < lps.size(); ++i)
                {
                    const auto n = transport.intake(lps[i]->id()).size();
                    backlog += n;
                    if (n > largest)
                    {
                        largest = n;
                        backlogged = i;
                    }
                }
                if (backlog > opts.max_in_flight)
                {
                    action = 4;
                }
                else
                {
                    backlogged.reset();
                }
            }
            if (action < 4)
            {
                if (transport.deliver_random(pick))
                {
                    continue;
                }
            }
            if (action == 8)
            {
                try
                {
                    pump_controller();
                }
                catch (const std::exception &e)
                {
                    throw RunError("controller failed during GVT round " + std::to_string(controller.round()) + ": " +
                                   e.what());
                }
                continue;
            }
            Lp &lp = *lps[backlogged ? *backlogged : pick.next_below(cfg.lps)];
            const char *phase = action < 6 ? "message intake" : "simulation";
            try
            {
                if (action < 6)
                {
                    lp.drain_transport();
                }
                else
                {
                    lp.step();
                }
            }
            catch (const std::exception &e)
            {
                throw RunError(lp_failure(lp.id(), phase, e));
            }
        }
        return collect_metrics(cfg, controller, seconds_since(start));
    }

    std::optional<RunMetrics> run_tcp_node(const PholdConfig &cfg, const ExecOptions &opts, const Topology &topology,
                                           std::size_t self)
    {
        cfg.validate();
        check_exec(opts);
        topology.validate(cfg.lps);
        if (self >= topology.nodes.size())
        {
            throw std::invalid_argument("node index out of range");
        }
        const auto &me = topology.nodes[self];
        const bool is_controller = topology.controller_node == self;

        const PholdModel model(cfg);
        const EntityMap map(cfg.entities, cfg.lps);
        TcpOptions tcp;
        tcp.connect_timeout = opts.connect_timeout;
        TcpTransport transport(topology, self, cfg.lps, tcp);
        transport.start();

        auto lps = make_lps(model, map, transport, me.first_lp, me.last_lp,
                            lp_options(cfg, opts.max_received_messages, opts.record_trace));
        std::optional<ControllerLoop> loop;
        if (is_controller)
        {
            loop.emplace(cfg.lps, cfg.end_time, transport, opts.gvt_period, topology.nodes.size());
        }

        const auto start = Clock::now();
        AbortFlag abort;
        std::vector<std::thread> threads;

        // Tells every other participant to give up; best effort.
        const auto broadcast_abort = [&](const std::string &why) {
            try
            {
                if (is_controller)
                {
                    for (std::size_t n = 0; n < topology.nodes.size(); ++n)
                    {
                        if (n != self)
                        {
                            transport.send(control(MessageKind::Shutdown, kControllerId, topology.nodes[n].first_lp, why));
                        }
                    }
                }
                else
                {
                    transport.send(control(MessageKind::Shutdown, me.first_lp, kControllerId, why));
                }
            }
            catch (const std::exception &)
            {
            }
        };

        try
        {
            bootstrap_all(lps);
            if (!is_controller)
            {
                transport.send(control(MessageKind::NodeReady, me.first_lp, kControllerId));
            }
        }
        catch (const std::exception &e)
        {
            broadcast_abort(e.what());
            throw;
        }
        threads = launch(lps, abort);

        if (is_controller)
        {
            try
            {
                Backoff backoff;
                while (!abort.raised() && !loop->done())
                {
                    if (loop->pump())
                    {
                        backoff.reset();
                    }
                    else
                    {
                        backoff.wait();
                    }
                }
            }
            catch (const std::exception &e)
            {
                abort.fail(controller_failure(*loop, e));
            }
            const double wall = seconds_since(start);
            join_all(threads);
            if (abort.raised())
            {
                broadcast_abort(abort.what());
                transport.close();
                throw RunError("node " + me.name + ": " + abort.what());
            }
            for (std::size_t n = 0; n < topology.nodes.size(); ++n)
            {
                if (n != self)
                {
                    transport.send(control(MessageKind::Shutdown, kControllerId, topology.nodes[n].first_lp));
                }
            }
            transport.close();
            return collect_metrics(cfg, loop->controller(), wall);
        }

        join_all(threads);
        if (abort.raised())
        {
            broadcast_abort("node " + me.name + ": " + abort.what());
            transport.close();
            throw RunError("node " + me.name + ": " + abort.what());
        }
        // Finished LPs stop reading their intake; the release arrives in
        // the first LP's mailbox.
        const auto deadline = Clock::now() + opts.connect_timeout;
        for (;;)
        {
            bool released = false;
            for (auto &m : transport.receive_batch(me.first_lp, 256))
            {
                if (m.kind == MessageKind::Shutdown)
                {
                    if (!m.payload.empty())
                    {
                        transport.close();
                        throw RunError("node " + me.name + ": aborted by controller: " + payload_text(m.payload));
                    }
                    released = true;
                }
            }
            if (released)
            {
                break;
            }
            if (Clock::now() >= deadline)
            {
                transport.close();
                throw RunError("node " + me.name + ": controller never released the node");
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(1));
        }
        transport.close();
        return std::nullopt;
    }

    RunMetrics run_tcp_local_cluster(const PholdConfig &cfg, const ExecOptions &opts, std::uint32_t num_nodes)
    {
        cfg.validate();
        if (num_nodes == 0 || num_nodes > cfg.lps)
        {
            throw std::invalid_argument("need between 1 and " + std::to_string(cfg.lps) + " nodes");
        }
        Topology topology;
        for (std::uint32_t n = 0; n < num_nodes; ++n)
        {
            NodeSpec spec;
            spec.name = "node" + std::to_string(n);
            spec.host = "127.0.0.1";
            spec.port = pick_free_port();
            spec.first_lp = static_cast<LpId>(std::uint64_t{n} * cfg.lps / num_nodes);
            spec.last_lp = static_cast<LpId>(std::uint64_t{n + 1} * cfg.lps / num_nodes - 1);
            topology.nodes.push_back(spec);
        }

        std::mutex mu;
        std::vector<std::string> failures;
        std::vector<std::thread> nodes;
        for (std::size_t n = 1; n < num_nodes; ++n)
        {
            nodes.emplace_back([&, n] {
                try
                {
                    run_tcp_node(cfg, opts, topology, n);
                }
                catch (const std::exception &e)
                {
                    std::lock_guard lock(mu);
                    failures.emplace_back(e.what());
                }
            });
        }
        std::optional<RunMetrics> metrics;
        try
        {
            metrics = run_tcp_node(cfg, opts, topology, 0);
        }
        catch (const std::exception &e)
        {
            std::lock_guard lock(mu);
            failures.insert(failures.begin(), e.what());
        }
        join_all(nodes);
        if (!failures.empty())
        {
            throw RunError(failures.front());
        }
        return std::move(*metrics);
    }

    ExperimentResult run_experiment(const RunConfig &cfg, Backend backend, const std::string &node)
    {
        cfg.validate();
        const ExecOptions opts = exec_options(cfg);
        std::optional<std::size_t> self;
        if (backend == Backend::Tcp && !cfg.topology.nodes.empty())
        {
            self = node.empty() ? cfg.topology.controller_node : cfg.topology.find(node);
        }

        ExperimentResult result;
        for (auto w : cfg.workloads)
        {
            for (auto e : cfg.entities)
            {
                for (auto l : cfg.lps)
                {
                    const PholdConfig point = cfg.point(w, e, l);
                    for (std::uint32_t rep = 1; rep <= cfg.repetitions; ++rep)
                    {
                        std::optional<RunMetrics> m;
                        if (backend == Backend::InProc)
                        {
                            m = run_inproc(point, opts);
                        }
                        else if (self)
                        {
                            m = run_tcp_node(point, opts, cfg.topology, *self);
                        }
                        else
                        {
                            m = run_tcp_local_cluster(point, opts, l);
                        }
                        if (m)
                        {
                            result.rows.push_back(ExperimentRow{rep, std::move(*m)});
                        }
                    }
                }
            }
        }
        return result;
    }

    std::vector<SpeedupRow> speedup_table(const SpeedupRow &baseline, const std::vector<SpeedupRow> &others)
    {
        if (baseline.lps != 1)
        {
            throw std::invalid_argument("speedup baseline must be the L=1 run, got L=" + std::to_string(baseline.lps));
        }
        if (!(baseline.mean_seconds > 0.0))
        {
            throw std::invalid_argument("speedup baseline has no positive mean time");
        }
        std::vector<SpeedupRow> rows;
        rows.push_back(SpeedupRow{1, baseline.mean_seconds, 1.0, 1.0});
        for (const auto &o : others)
        {
            if (o.lps == 0 || !(o.mean_seconds > 0.0))
            {
                throw std::invalid_argument("speedup row needs L >= 1 and a positive mean time");
            }
            if (o.lps == 1)
            {
                continue;
            }
            const double s = baseline.mean_seconds / o.mean_seconds;
            rows.push_back(SpeedupRow{o.lps, o.mean_seconds, s, s / o.lps});
        }
        return rows;
    }

    namespace
    {
        std::string fmt(const char *spec, double v)
        {
            char buf[64];
            std::snprintf(buf, sizeof buf, spec, v);
            return buf;
        }

        struct Accumulator
        {
            std::uint32_t runs = 0;
            double wall = 0, rollbacks = 0, committed = 0, processed = 0, rolled_back = 0, remote = 0, antis = 0,
                   peak = 0, rounds = 0;

            void add(const RunMetrics &m)
            {
                ++runs;
                wall += m.wall_clock_seconds;
                rollbacks += static_cast<double>(m.total_rollbacks);
                committed += static_cast<double>(m.events_committed);
                processed += static_cast<double>(m.events_processed);
                rolled_back += static_cast<double>(m.events_rolled_back);
                remote += static_cast<double>(m.remote_sends);
                antis += static_cast<double>(m.antimessages_sent);
                peak += static_cast<double>(m.peak_history);
                rounds += static_cast<double>(m.gvt_trace.size());
            }
        };

        void config_columns(std::ostream &os, const PholdConfig &c)
        {
            os << c.workload_fpops << ',' << c.entities << ',' << c.lps << ',' << fmt("%g", c.rho) << ','
               << fmt("%g", c.mean_increment) << ',' << fmt("%g", c.end_time.value()) << ',' << c.base_seed << ','
               << (c.rng_mode == RngMode::PerEntity ? "per_entity" : "per_lp");
        }
    }

    void write_results_csv(std::ostream &os, const ExperimentResult &result)
    {
        os << "kind,repetition,workload,entities,lps,rho,mean_increment,end_time,seed,rng_mode,"
              "wall_clock_s,total_rollbacks,events_committed,events_processed,events_rolled_back,"
              "remote_sends,antimessages_sent,peak_history,gvt_rounds,final_gvt,summary,speedup,efficiency\n";

        using Key = std::tuple<std::uint64_t, std::uint32_t, std::uint32_t>;
        std::vector<Key> order;
        std::map<Key, Accumulator> means;
        std::map<Key, PholdConfig> configs;
        for (const auto &row : result.rows)
        {
            const auto &m = row.metrics;
            const Key key{m.config.workload_fpops, m.config.entities, m.config.lps};
            if (!means.contains(key))
            {
                order.push_back(key);
                configs[key] = m.config;
            }
            means[key].add(m);

            os << "run," << row.repetition << ',';
            config_columns(os, m.config);
            os << ',' << fmt("%.6f", m.wall_clock_seconds) << ',' << m.total_rollbacks << ',' << m.events_committed << ','
               << m.events_processed << ',' << m.events_rolled_back << ',' << m.remote_sends << ','
               << m.antimessages_sent << ',' << m.peak_history << ',' << m.gvt_trace.size() << ','
               << fmt("%.17g", m.gvt_trace.empty() ? 0.0 : m.gvt_trace.back().value()) << ',' << m.summary << ",,\n";
        }

        for (const auto &key : order)
        {
            const auto &a = means.at(key);
            const double n = a.runs;
            std::string speedup, efficiency;
            const auto base = means.find(Key{std::get<0>(key), std::get<1>(key), 1});
            if (base != means.end() && a.wall > 0.0 && base->second.wall > 0.0)
            {
                const auto rows = speedup_table(SpeedupRow{1, base->second.wall / base->second.runs, 0, 0},
                                                {SpeedupRow{std::get<2>(key), a.wall / n, 0, 0}});
                const auto &r = rows.back();
                speedup = fmt("%.6f", r.speedup);
                efficiency = fmt("%.6f", r.efficiency);
            }
            os << "mean," << a.runs << ',';
            config_columns(os, configs.at(key));
            os << ',' << fmt("%.6f", a.wall / n) << ',' << fmt("%.6g", a.rollbacks / n) << ','
               << fmt("%.6g", a.committed / n) << ',' << fmt("%.6g", a.processed / n) << ','
               << fmt("%.6g", a.rolled_back / n) << ',' << fmt("%.6g", a.remote / n) << ',' << fmt("%.6g", a.antis / n)
               << ',' << fmt("%.6g", a.peak / n) << ',' << fmt("%.6g", a.rounds / n) << ",,," << speedup << ','
               << efficiency << '\n';
        }
    }
}
