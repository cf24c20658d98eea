#pragma once

#include "twsim/config.hpp"
#include "twsim/gvt.hpp"
#include "twsim/phold.hpp"
#include "twsim/tcp_transport.hpp"
#include "twsim/trace.hpp"
#include "twsim/transport.hpp"

#include <chrono>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace twsim
{
    enum class Backend
    {
        InProc,
        Tcp,
    };

    Backend parse_backend(std::string_view name);
    std::string_view to_string(Backend b) noexcept;

    // A run aborted; the message names the LP and the phase.
    class RunError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    struct ExecOptions
    {
        double gvt_period = 1.0; // wall-clock seconds between GVT rounds
        std::size_t max_received_messages = 64;
        bool record_trace = false;
        std::chrono::milliseconds connect_timeout{30000};
    };

    ExecOptions exec_options(const RunConfig &cfg);

    struct RunMetrics
    {
        PholdConfig config;
        double wall_clock_seconds = 0.0;
        std::uint64_t total_rollbacks = 0;
        std::vector<std::uint64_t> lp_rollbacks;
        std::uint64_t events_committed = 0;
        std::uint64_t events_processed = 0;
        std::uint64_t events_rolled_back = 0;
        std::uint64_t events_sent = 0;
        std::uint64_t remote_sends = 0;
        std::uint64_t antimessages_sent = 0;
        std::uint64_t committed_sends = 0;
        std::uint64_t committed_remote_sends = 0;
        std::uint64_t peak_history = 0; // max over LPs
        std::uint64_t summary = 0;      // sum of per-LP model summaries
        std::vector<Timestamp> gvt_trace;
        std::vector<LpReport> lp_reports;
        Trace trace; // canonical committed trace (empty unless recorded)
    };

    // Sums the final LP reports. The controller must have seen every LP finish.
    RunMetrics collect_metrics(const PholdConfig &cfg, const GvtController &controller, double wall_clock_seconds);

    // One thread per LP over InProcTransport; the calling thread runs the
    // GVT controller.
    RunMetrics run_inproc(const PholdConfig &cfg, const ExecOptions &opts);

    // State of the whole system when a GVT round closes.
    struct RoundSnapshot
    {
        std::uint64_t round = 0;
        Timestamp gvt{};
        // Smallest timestamp of any pending event or antimessage (inboxes,
        // antimessage buffers, intakes, in flight).
        Timestamp true_min{};
        // Pending events minus antimessages that will cancel one.
        std::int64_t live_events = 0;
    };

    using Inspector = std::function<void(const RoundSnapshot &)>;

    struct ScheduleOptions
    {
        std::uint64_t schedule_seed = 1;
        std::size_t max_received_messages = 4;
        // Scheduler actions between the end of one GVT round and the next.
        std::uint32_t round_interval = 64;
        // Messages in flight, or delivered but not yet taken in, beyond this
        // are worked off before anything else.
        std::size_t max_in_flight = 256;
        bool record_trace = true;
        Inspector inspector;
    };

    // Single-threaded run over ScheduledTransport. Every action (deliver one
    // random in-flight message, poll one random LP, or run the controller) is
    // chosen by a generator seeded from schedule_seed, so messages are
    // delayed and reordered arbitrarily but reproducibly.
    RunMetrics run_scheduled(const PholdConfig &cfg, const ScheduleOptions &opts);

    // Runs the LPs of topology node `self`. The controller node returns the
    // metrics once every LP has finished; other nodes return nullopt after
    // the controller releases them.
    std::optional<RunMetrics> run_tcp_node(const PholdConfig &cfg, const ExecOptions &opts, const Topology &topology,
                                           std::size_t self);

    // Every node of a fresh localhost topology in its own thread of this
    // process, talking over real sockets. Nodes get contiguous LP blocks.
    RunMetrics run_tcp_local_cluster(const PholdConfig &cfg, const ExecOptions &opts, std::uint32_t num_nodes);

    struct ExperimentRow
    {
        std::uint32_t repetition = 0;
        RunMetrics metrics;
    };

    struct ExperimentResult
    {
        std::vector<ExperimentRow> rows;
    };

    // Every point of the matrix, `repetitions` times. With a topology the
    // TCP backend runs node `node` (name or index); without one it starts a
    // localhost cluster with one node per LP.
    ExperimentResult run_experiment(const RunConfig &cfg, Backend backend, const std::string &node = {});

    struct SpeedupRow
    {
        std::uint32_t lps = 0;
        double mean_seconds = 0.0;
        double speedup = 0.0;
        double efficiency = 0.0;
    };

    // S_L = T_1 / T_L and Eff_L = S_L / L from mean wall-clock times.
    // Throws std::invalid_argument unless baseline.lps == 1.
    std::vector<SpeedupRow> speedup_table(const SpeedupRow &baseline, const std::vector<SpeedupRow> &others);

    // One row per run followed by a mean row per matrix point. Mean rows
    // carry speedup and efficiency when the same (workload, E) was also run
    // with L=1. Columns other than the configuration, events_committed and
    // summary depend on thread timing.
    void write_results_csv(std::ostream &os, const ExperimentResult &result);
}
