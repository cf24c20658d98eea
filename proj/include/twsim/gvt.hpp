#pragma once

#include "twsim/errors.hpp"
#include "twsim/messages.hpp"
#include "twsim/trace.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

namespace twsim
{
    struct LocalMinReport
    {
        LpId lp = 0;
        Timestamp local_min{};
    };

    // Central GVT controller (Samadi's algorithm with marked acks).
    //
    // A round broadcasts GvtRequest to every LP. On receipt an LP enters find
    // mode, answers with its local minimum, and marks every ack it sends until
    // the GVT broadcast arrives; senders fold marked-ack timestamps into their
    // next report. The round closes once all LPs have reported; GVT is the
    // minimum of the reports. At most one round is in flight.
    class GvtController
    {
    public:
        GvtController(std::uint32_t num_lps, Timestamp end_time);

        // Throws std::logic_error if a round is already active or the run stopped.
        std::vector<Message> start_round();

        // Records one report. When it completes the round, returns the
        // messages to send: a GvtBroadcast to every LP, followed by Stop to
        // every LP once GVT >= end_time.
        std::optional<std::vector<Message>> on_report(const Message &report);

        // Minimum over the current round's reports. Throws std::logic_error
        // if a report is missing.
        Timestamp compute_gvt() const;

        // Stores an LP's final report. True once every LP has finished.
        bool on_finished(const Message &finished);

        bool round_active() const noexcept { return round_active_; }
        bool stopped() const noexcept { return stopped_; }
        bool all_finished() const noexcept { return finished_.size() == num_lps_; }
        std::uint64_t round() const noexcept { return round_; }
        Timestamp current_gvt() const noexcept { return current_gvt_; }
        Timestamp end_time() const noexcept { return end_time_; }
        const std::vector<Timestamp> &gvt_trace() const noexcept { return trace_; }
        const std::map<LpId, Timestamp> &reports() const noexcept { return reports_; }
        std::vector<LpReport> lp_reports() const;

    private:
        std::uint32_t num_lps_;
        Timestamp end_time_;
        bool round_active_ = false;
        bool stopped_ = false;
        std::uint64_t round_ = 0;
        std::map<LpId, Timestamp> reports_;
        Timestamp current_gvt_{};
        std::vector<Timestamp> trace_;
        std::map<LpId, LpReport> finished_;
    };
}
