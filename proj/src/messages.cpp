#include "twsim/messages.hpp"

#include <bit>
#include <sstream>

namespace twsim
{
    bool is_valid_kind(std::uint8_t raw) noexcept
    {
        return raw <= 3 || (raw >= 16 && raw <= 22);
    }

    const char *to_string(MessageKind kind) noexcept
    {
        switch (kind)
        {
        case MessageKind::Event: return "event";
        case MessageKind::Ack: return "ack";
        case MessageKind::MarkedAck: return "marked_ack";
        case MessageKind::Antimessage: return "antimessage";
        case MessageKind::GvtRequest: return "gvt_request";
        case MessageKind::GvtReport: return "gvt_report";
        case MessageKind::GvtBroadcast: return "gvt_broadcast";
        case MessageKind::Stop: return "stop";
        case MessageKind::LpFinished: return "lp_finished";
        case MessageKind::NodeReady: return "node_ready";
        case MessageKind::Shutdown: return "shutdown";
        }
        return "unknown";
    }

    Message make_antimessage(const Message &m)
    {
        if (m.kind != MessageKind::Event)
        {
            throw std::invalid_argument("make_antimessage: expected an event, got " + std::string(to_string(m.kind)));
        }
        Message anti = m;
        anti.kind = MessageKind::Antimessage;
        return anti;
    }

    bool annihilates(const Message &a, const Message &b) noexcept
    {
        const bool pair = (a.kind == MessageKind::Event && b.kind == MessageKind::Antimessage) ||
                          (a.kind == MessageKind::Antimessage && b.kind == MessageKind::Event);
        return pair && a.lp_sender == b.lp_sender && a.seq_number == b.seq_number;
    }

    Message make_ack(const Message &received, bool marked)
    {
        if (received.kind != MessageKind::Event && received.kind != MessageKind::Antimessage)
        {
            throw std::invalid_argument("make_ack: only events and antimessages are acknowledged");
        }
        Message ack;
        ack.kind = marked ? MessageKind::MarkedAck : MessageKind::Ack;
        ack.seq_number = received.seq_number;
        ack.lp_sender = received.lp_receiver;
        ack.lp_receiver = received.lp_sender;
        ack.timestamp = received.timestamp;
        return ack;
    }

    namespace wire
    {
        void put_u8(std::vector<std::byte> &out, std::uint8_t v)
        {
            out.push_back(static_cast<std::byte>(v));
        }

        void put_u32(std::vector<std::byte> &out, std::uint32_t v)
        {
            for (int i = 0; i < 4; ++i)
            {
                out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFFu));
            }
        }

        void put_u64(std::vector<std::byte> &out, std::uint64_t v)
        {
            for (int i = 0; i < 8; ++i)
            {
                out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFFu));
            }
        }

        void put_f64(std::vector<std::byte> &out, double v)
        {
            put_u64(out, std::bit_cast<std::uint64_t>(v));
        }

        std::span<const std::byte> Reader::take(std::size_t n)
        {
            if (remaining() < n)
            {
                throw DecodeError("truncated input");
            }
            auto s = bytes_.subspan(pos_, n);
            pos_ += n;
            return s;
        }

        std::uint8_t Reader::u8()
        {
            return std::to_integer<std::uint8_t>(take(1)[0]);
        }

        std::uint32_t Reader::u32()
        {
            auto s = take(4);
            std::uint32_t v = 0;
            for (int i = 3; i >= 0; --i)
            {
                v = (v << 8) | std::to_integer<std::uint32_t>(s[static_cast<std::size_t>(i)]);
            }
            return v;
        }

        std::uint64_t Reader::u64()
        {
            auto s = take(8);
            std::uint64_t v = 0;
            for (int i = 7; i >= 0; --i)
            {
                v = (v << 8) | std::to_integer<std::uint64_t>(s[static_cast<std::size_t>(i)]);
            }
            return v;
        }

        double Reader::f64()
        {
            return std::bit_cast<double>(u64());
        }
    }

    void encode_into(const Message &m, std::vector<std::byte> &out)
    {
        out.reserve(out.size() + kHeaderSize + m.payload.size());
        wire::put_u8(out, static_cast<std::uint8_t>(m.kind));
        wire::put_u64(out, m.seq_number);
        wire::put_u32(out, m.lp_sender);
        wire::put_u32(out, m.lp_receiver);
        wire::put_f64(out, m.timestamp.value());
        wire::put_u32(out, static_cast<std::uint32_t>(m.payload.size()));
        out.insert(out.end(), m.payload.begin(), m.payload.end());
    }

    std::vector<std::byte> encode(const Message &m)
    {
        std::vector<std::byte> out;
        encode_into(m, out);
        return out;
    }

    Message decode(std::span<const std::byte> bytes)
    {
        wire::Reader in(bytes);
        Message m;
        const auto kind = in.u8();
        if (!is_valid_kind(kind))
        {
            throw DecodeError("unknown message kind " + std::to_string(kind));
        }
        m.kind = static_cast<MessageKind>(kind);
        m.seq_number = in.u64();
        m.lp_sender = in.u32();
        m.lp_receiver = in.u32();
        const double ts = in.f64();
        if (!(ts >= 0.0))
        {
            throw DecodeError("invalid timestamp");
        }
        m.timestamp = Timestamp(ts);
        const auto len = in.u32();
        auto body = in.take(len);
        m.payload.assign(body.begin(), body.end());
        if (in.remaining() != 0)
        {
            throw DecodeError("trailing bytes after message");
        }
        return m;
    }

    Payload encode_payload(const PholdPayload &p)
    {
        Payload out;
        out.reserve(kPholdPayloadSize);
        wire::put_u32(out, p.entity_sender);
        wire::put_u32(out, p.entity_receiver);
        wire::put_u64(out, p.value);
        return out;
    }

    PholdPayload decode_phold_payload(std::span<const std::byte> bytes)
    {
        if (bytes.size() != kPholdPayloadSize)
        {
            throw DecodeError("phold payload must be 16 bytes");
        }
        wire::Reader in(bytes);
        PholdPayload p;
        p.entity_sender = in.u32();
        p.entity_receiver = in.u32();
        p.value = in.u64();
        return p;
    }

    std::uint64_t payload_digest(std::span<const std::byte> bytes) noexcept
    {
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (auto b : bytes)
        {
            h ^= std::to_integer<std::uint64_t>(b);
            h *= 0x100000001b3ull;
        }
        return h;
    }

    std::string describe(const Message &m)
    {
        std::ostringstream os;
        os << to_string(m.kind) << "(seq=" << m.seq_number << ", " << m.lp_sender << "->";
        if (m.lp_receiver == kControllerId)
        {
            os << "controller";
        }
        else
        {
            os << m.lp_receiver;
        }
        os << ", ts=" << m.timestamp.value() << ")";
        return os.str();
    }
}
