#include "twsim/gvt.hpp"

#include <algorithm>
#include <string>

namespace twsim
{
    namespace
    {
        Message control(MessageKind kind, LpId to, SeqNumber round, Timestamp ts)
        {
            Message m;
            m.kind = kind;
            m.seq_number = round;
            m.lp_sender = kControllerId;
            m.lp_receiver = to;
            m.timestamp = ts;
            return m;
        }
    }

    GvtController::GvtController(std::uint32_t num_lps, Timestamp end_time) : num_lps_(num_lps), end_time_(end_time)
    {
        if (num_lps == 0)
        {
            throw std::invalid_argument("GVT controller needs at least one LP");
        }
    }

    std::vector<Message> GvtController::start_round()
    {
        if (stopped_)
        {
            throw std::logic_error("GVT controller already stopped the run");
        }
        if (round_active_)
        {
            throw std::logic_error("GVT round " + std::to_string(round_) + " still active");
        }
        round_active_ = true;
        ++round_;
        reports_.clear();
        std::vector<Message> out;
        out.reserve(num_lps_);
        for (LpId lp = 0; lp < num_lps_; ++lp)
        {
            out.push_back(control(MessageKind::GvtRequest, lp, round_, current_gvt_));
        }
        return out;
    }

    std::optional<std::vector<Message>> GvtController::on_report(const Message &report)
    {
        if (report.kind != MessageKind::GvtReport)
        {
            throw std::invalid_argument("expected a GVT report, got " + describe(report));
        }
        if (!round_active_ || report.seq_number != round_)
        {
            throw ProtocolError("GVT report for inactive round: " + describe(report));
        }
        if (report.lp_sender >= num_lps_)
        {
            throw ProtocolError("GVT report from unknown LP " + std::to_string(report.lp_sender));
        }
        if (!reports_.emplace(report.lp_sender, report.timestamp).second)
        {
            throw ProtocolError("duplicate GVT report from LP " + std::to_string(report.lp_sender));
        }
        if (reports_.size() < num_lps_)
        {
            return std::nullopt;
        }

        const Timestamp gvt = compute_gvt();
        if (gvt < current_gvt_)
        {
            throw ProtocolError("GVT regressed from " + std::to_string(current_gvt_.value()) + " to " +
                                std::to_string(gvt.value()));
        }
        current_gvt_ = gvt;
        trace_.push_back(gvt);
        round_active_ = false;

        std::vector<Message> out;
        for (LpId lp = 0; lp < num_lps_; ++lp)
        {
            out.push_back(control(MessageKind::GvtBroadcast, lp, round_, gvt));
        }
        if (gvt >= end_time_)
        {
            stopped_ = true;
            for (LpId lp = 0; lp < num_lps_; ++lp)
            {
                out.push_back(control(MessageKind::Stop, lp, round_, gvt));
            }
        }
        return out;
    }

    Timestamp GvtController::compute_gvt() const
    {
        if (reports_.size() != num_lps_)
        {
            throw std::logic_error("GVT needs all " + std::to_string(num_lps_) + " reports, have " +
                                   std::to_string(reports_.size()));
        }
        Timestamp gvt = Timestamp::infinity();
        for (const auto &[lp, ts] : reports_)
        {
            gvt = std::min(gvt, ts);
        }
        return gvt;
    }

    bool GvtController::on_finished(const Message &finished)
    {
        if (finished.kind != MessageKind::LpFinished)
        {
            throw std::invalid_argument("expected an LP finished message, got " + describe(finished));
        }
        auto report = decode_report(finished.payload);
        if (report.lp >= num_lps_ || !finished_.emplace(report.lp, std::move(report)).second)
        {
            throw ProtocolError("unexpected finish report from LP " + std::to_string(finished.lp_sender));
        }
        return all_finished();
    }

    std::vector<LpReport> GvtController::lp_reports() const
    {
        std::vector<LpReport> out;
        for (const auto &[lp, r] : finished_)
        {
            out.push_back(r);
        }
        return out;
    }
}
