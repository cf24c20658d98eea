#include "twsim/config.hpp"
#include "twsim/runner.hpp"
#include "twsim/sequential.hpp"

#include <pybind11/chrono.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <tuple>

namespace py = pybind11;
using namespace twsim;

namespace
{
    using Row = std::tuple<double, EntityId, std::uint64_t>;

    std::vector<Row> to_rows(const Trace &trace)
    {
        std::vector<Row> out;
        out.reserve(trace.size());
        for (const auto &e : trace)
        {
            out.emplace_back(e.timestamp.value(), e.entity, e.digest);
        }
        return out;
    }

    std::vector<double> to_floats(const std::vector<Timestamp> &ts)
    {
        std::vector<double> out;
        out.reserve(ts.size());
        for (auto t : ts)
        {
            out.push_back(t.value());
        }
        return out;
    }

    ExecOptions make_exec(double gvt_period, std::size_t max_received_messages, bool record_trace,
                          double connect_timeout)
    {
        ExecOptions o;
        o.gvt_period = gvt_period;
        o.max_received_messages = max_received_messages;
        o.record_trace = record_trace;
        o.connect_timeout = std::chrono::milliseconds(static_cast<std::int64_t>(connect_timeout * 1000.0));
        return o;
    }
}

PYBIND11_MODULE(_twsim, m)
{
    m.doc() = "Optimistic (Time Warp) PHOLD simulator";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<RunError>(m, "RunError", PyExc_RuntimeError);

    py::enum_<RngMode>(m, "RngMode")
        .value("PER_ENTITY", RngMode::PerEntity)
        .value("PER_LP", RngMode::PerLp);

    py::enum_<Backend>(m, "Backend")
        .value("INPROC", Backend::InProc)
        .value("TCP", Backend::Tcp);

    py::class_<PholdConfig>(m, "PholdConfig")
        .def(py::init([](std::uint32_t lps, std::uint32_t entities, double rho, std::uint64_t workload,
                         double mean_increment, double end_time, std::int64_t seed, RngMode rng_mode) {
                 PholdConfig c;
                 c.lps = lps;
                 c.entities = entities;
                 c.rho = rho;
                 c.workload_fpops = workload;
                 c.mean_increment = mean_increment;
                 c.end_time = Timestamp(end_time);
                 c.base_seed = seed;
                 c.rng_mode = rng_mode;
                 c.validate();
                 return c;
             }),
             py::kw_only(), py::arg("lps") = 1, py::arg("entities") = 840, py::arg("rho") = 0.5,
             py::arg("workload") = 0, py::arg("mean_increment") = 5.0, py::arg("end_time") = 1000.0,
             py::arg("seed") = 12345, py::arg("rng_mode") = RngMode::PerEntity)
        .def_readwrite("lps", &PholdConfig::lps)
        .def_readwrite("entities", &PholdConfig::entities)
        .def_readwrite("rho", &PholdConfig::rho)
        .def_readwrite("workload", &PholdConfig::workload_fpops)
        .def_readwrite("mean_increment", &PholdConfig::mean_increment)
        .def_property(
            "end_time", [](const PholdConfig &c) { return c.end_time.value(); },
            [](PholdConfig &c, double t) { c.end_time = Timestamp(t); })
        .def_readwrite("seed", &PholdConfig::base_seed)
        .def_readwrite("rng_mode", &PholdConfig::rng_mode)
        .def("validate", &PholdConfig::validate)
        .def("__repr__", [](const PholdConfig &c) {
            std::ostringstream os;
            os << "PholdConfig(lps=" << c.lps << ", entities=" << c.entities << ", rho=" << c.rho
               << ", workload=" << c.workload_fpops << ", end_time=" << c.end_time.value() << ", seed=" << c.base_seed
               << ")";
            return os.str();
        });

    m.def("initial_event_count", &initial_event_count, py::arg("config"));

    py::class_<ParkMiller>(m, "ParkMiller")
        .def(py::init<std::int64_t>(), py::arg("seed") = 1)
        .def("next", &ParkMiller::next)
        .def("next_uniform01", &ParkMiller::next_uniform01)
        .def("next_exponential", &ParkMiller::next_exponential, py::arg("mean"))
        .def("next_below", &ParkMiller::next_below, py::arg("n"))
        .def("discard", &ParkMiller::discard, py::arg("steps"))
        .def_property_readonly("state", &ParkMiller::state);

    m.def("seed_for_entity", &seed_for_entity, py::arg("base_seed"), py::arg("entity"));

    py::class_<RunMetrics>(m, "RunMetrics")
        .def_readonly("config", &RunMetrics::config)
        .def_readonly("wall_clock_seconds", &RunMetrics::wall_clock_seconds)
        .def_readonly("total_rollbacks", &RunMetrics::total_rollbacks)
        .def_readonly("lp_rollbacks", &RunMetrics::lp_rollbacks)
        .def_readonly("events_committed", &RunMetrics::events_committed)
        .def_readonly("events_processed", &RunMetrics::events_processed)
        .def_readonly("events_rolled_back", &RunMetrics::events_rolled_back)
        .def_readonly("events_sent", &RunMetrics::events_sent)
        .def_readonly("remote_sends", &RunMetrics::remote_sends)
        .def_readonly("antimessages_sent", &RunMetrics::antimessages_sent)
        .def_readonly("committed_sends", &RunMetrics::committed_sends)
        .def_readonly("committed_remote_sends", &RunMetrics::committed_remote_sends)
        .def_readonly("peak_history", &RunMetrics::peak_history)
        .def_readonly("summary", &RunMetrics::summary)
        .def_property_readonly("gvt_trace", [](const RunMetrics &r) { return to_floats(r.gvt_trace); })
        .def_property_readonly("trace", [](const RunMetrics &r) { return to_rows(r.trace); });

    m.def(
        "run_sequential",
        [](const PholdConfig &cfg) {
            Trace t;
            {
                py::gil_scoped_release release;
                t = run_sequential(cfg);
                canonicalize(t);
            }
            return to_rows(t);
        },
        py::arg("config"), "Committed trace of a plain sequential run, as sorted (timestamp, entity, digest) tuples.");

    m.def(
        "run_inproc",
        [](const PholdConfig &cfg, double gvt_period, std::size_t max_received_messages, bool record_trace) {
            py::gil_scoped_release release;
            return run_inproc(cfg, make_exec(gvt_period, max_received_messages, record_trace, 30.0));
        },
        py::arg("config"), py::kw_only(), py::arg("gvt_period") = 1.0, py::arg("max_received_messages") = 64,
        py::arg("record_trace") = false, "One thread per LP over the in-process transport.");

    m.def(
        "run_tcp_local_cluster",
        [](const PholdConfig &cfg, std::uint32_t nodes, double gvt_period, std::size_t max_received_messages,
           bool record_trace, double connect_timeout) {
            py::gil_scoped_release release;
            return run_tcp_local_cluster(
                cfg, make_exec(gvt_period, max_received_messages, record_trace, connect_timeout), nodes);
        },
        py::arg("config"), py::arg("nodes"), py::kw_only(), py::arg("gvt_period") = 1.0,
        py::arg("max_received_messages") = 64, py::arg("record_trace") = false, py::arg("connect_timeout") = 30.0,
        "Every node of a localhost TCP cluster in this process.");

    m.def(
        "run_scheduled",
        [](const PholdConfig &cfg, std::uint64_t schedule_seed, std::size_t max_received_messages,
           std::uint32_t round_interval, bool record_trace) {
            ScheduleOptions o;
            o.schedule_seed = schedule_seed;
            o.max_received_messages = max_received_messages;
            o.round_interval = round_interval;
            o.record_trace = record_trace;
            py::gil_scoped_release release;
            return run_scheduled(cfg, o);
        },
        py::arg("config"), py::kw_only(), py::arg("schedule_seed") = 1, py::arg("max_received_messages") = 4,
        py::arg("round_interval") = 64, py::arg("record_trace") = true,
        "Single-threaded run with a seeded random delivery schedule.");

    py::class_<RunConfig>(m, "RunConfig")
        .def_readonly("phold", &RunConfig::phold)
        .def_readonly("lps", &RunConfig::lps)
        .def_readonly("entities", &RunConfig::entities)
        .def_readonly("workloads", &RunConfig::workloads)
        .def_readonly("gvt_period", &RunConfig::gvt_period)
        .def_readonly("repetitions", &RunConfig::repetitions)
        .def_readonly("max_received_messages", &RunConfig::max_received_messages)
        .def_readonly("record_trace", &RunConfig::record_trace)
        .def_readonly("output", &RunConfig::output);

    m.def("parse_config", &parse_config, py::arg("text"));
    m.def(
        "load_config", [](const std::string &path) { return load_config(path); }, py::arg("path"));

    py::class_<ExperimentRow>(m, "ExperimentRow")
        .def_readonly("repetition", &ExperimentRow::repetition)
        .def_readonly("metrics", &ExperimentRow::metrics);

    m.def(
        "run_experiment",
        [](const RunConfig &cfg, Backend backend) {
            py::gil_scoped_release release;
            return run_experiment(cfg, backend).rows;
        },
        py::arg("config"), py::arg("backend") = Backend::InProc, "Every point of the config's run matrix.");

    m.def(
        "results_csv",
        [](const std::vector<ExperimentRow> &rows) {
            std::ostringstream os;
            write_results_csv(os, ExperimentResult{rows});
            return os.str();
        },
        py::arg("rows"));
}
