#pragma once

#include "twsim/messages.hpp"

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace twsim
{
    // One executed event: when, on which entity, and what it carried.
    struct TraceEntry
    {
        Timestamp timestamp{};
        EntityId entity = 0;
        std::uint64_t digest = 0;

        friend bool operator==(const TraceEntry &, const TraceEntry &) = default;
        friend auto operator<=>(const TraceEntry &, const TraceEntry &) = default;
    };

    using Trace = std::vector<TraceEntry>;

    // Sorts by (timestamp, entity, digest) so traces merged from different
    // partitions compare element-wise.
    void canonicalize(Trace &trace);

    // One line per entry: "<timestamp %.17g> <entity> <digest hex>".
    void write_trace(std::ostream &os, const Trace &trace);
    Trace read_trace(std::istream &is);

    // Per-LP outcome shipped to the controller when an LP stops.
    struct LpReport
    {
        LpId lp = 0;
        std::uint64_t rollbacks = 0;
        std::uint64_t events_processed = 0;
        std::uint64_t events_rolled_back = 0;
        std::uint64_t events_committed = 0;
        std::uint64_t peak_history = 0;
        std::uint64_t events_sent = 0;
        std::uint64_t remote_sends = 0;
        std::uint64_t antimessages_sent = 0;
        // Sends made by committed events.
        std::uint64_t committed_sends = 0;
        std::uint64_t committed_remote_sends = 0;
        std::uint64_t summary = 0;
        Trace trace;

        friend bool operator==(const LpReport &, const LpReport &) = default;
    };

    Payload encode_report(const LpReport &r);
    LpReport decode_report(std::span<const std::byte> bytes);
}
