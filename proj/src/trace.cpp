#include "twsim/trace.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace twsim
{
    void canonicalize(Trace &trace)
    {
        std::sort(trace.begin(), trace.end());
    }

    void write_trace(std::ostream &os, const Trace &trace)
    {
        char line[96];
        for (const auto &e : trace)
        {
            std::snprintf(line, sizeof line, "%.17g %" PRIu32 " %016" PRIx64 "\n", e.timestamp.value(), e.entity, e.digest);
            os << line;
        }
    }

    Trace read_trace(std::istream &is)
    {
        Trace out;
        std::string line;
        while (std::getline(is, line))
        {
            if (line.empty())
            {
                continue;
            }
            std::istringstream fields(line);
            double ts = 0;
            EntityId entity = 0;
            std::string digest;
            if (!(fields >> ts >> entity >> digest))
            {
                throw std::runtime_error("malformed trace line: " + line);
            }
            out.push_back(TraceEntry{Timestamp(ts), entity, std::stoull(digest, nullptr, 16)});
        }
        return out;
    }

    Payload encode_report(const LpReport &r)
    {
        Payload out;
        wire::put_u32(out, r.lp);
        for (auto v : {r.rollbacks, r.events_processed, r.events_rolled_back, r.events_committed, r.peak_history,
                       r.events_sent, r.remote_sends, r.antimessages_sent, r.committed_sends, r.committed_remote_sends,
                       r.summary})
        {
            wire::put_u64(out, v);
        }
        wire::put_u64(out, r.trace.size());
        for (const auto &e : r.trace)
        {
            wire::put_f64(out, e.timestamp.value());
            wire::put_u32(out, e.entity);
            wire::put_u64(out, e.digest);
        }
        return out;
    }

    LpReport decode_report(std::span<const std::byte> bytes)
    {
        wire::Reader in(bytes);
        LpReport r;
        r.lp = in.u32();
        r.rollbacks = in.u64();
        r.events_processed = in.u64();
        r.events_rolled_back = in.u64();
        r.events_committed = in.u64();
        r.peak_history = in.u64();
        r.events_sent = in.u64();
        r.remote_sends = in.u64();
        r.antimessages_sent = in.u64();
        r.committed_sends = in.u64();
        r.committed_remote_sends = in.u64();
        r.summary = in.u64();
        const auto n = in.u64();
        if (n > in.remaining() / 20)
        {
            throw DecodeError("report trace length exceeds payload");
        }
        r.trace.reserve(n);
        for (std::uint64_t i = 0; i < n; ++i)
        {
            const double ts = in.f64();
            const auto entity = in.u32();
            const auto digest = in.u64();
            r.trace.push_back(TraceEntry{Timestamp(ts), entity, digest});
        }
        if (in.remaining() != 0)
        {
            throw DecodeError("trailing bytes after report");
        }
        return r;
    }
}
