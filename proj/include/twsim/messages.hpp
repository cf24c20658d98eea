#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace twsim
{
    // Simulated time. Non-negative and never NaN; +infinity is admitted as the
    // "no pending work" sentinel used by GVT reports.
    class Timestamp
    {
    public:
        constexpr Timestamp() noexcept = default;

        explicit Timestamp(double value) : value_(value)
        {
            if (!(value >= 0.0))
            {
                throw std::invalid_argument("timestamp must be a non-negative number");
            }
        }

        static constexpr Timestamp infinity() noexcept
        {
            Timestamp t;
            t.value_ = std::numeric_limits<double>::infinity();
            return t;
        }

        constexpr double value() const noexcept { return value_; }
        constexpr bool is_infinite() const noexcept { return value_ == std::numeric_limits<double>::infinity(); }

        friend constexpr bool operator==(Timestamp a, Timestamp b) noexcept { return a.value_ == b.value_; }
        friend constexpr auto operator<=>(Timestamp a, Timestamp b) noexcept
        {
            // Total because NaN is excluded at construction.
            return a.value_ < b.value_ ? std::strong_ordering::less
                 : b.value_ < a.value_ ? std::strong_ordering::greater
                                       : std::strong_ordering::equal;
        }

    private:
        double value_ = 0.0;
    };

    using LpId = std::uint32_t;
    using EntityId = std::uint32_t;
    using SeqNumber = std::uint64_t;

    // Address of the GVT controller endpoint. Never hosts entities.
    inline constexpr LpId kControllerId = 0xFFFFFFFFu;

    enum class MessageKind : std::uint8_t
    {
        Event = 0,
        Ack = 1,
        MarkedAck = 2,
        Antimessage = 3,

        // Control traffic between LPs, runner nodes and the GVT controller.
        GvtRequest = 16,
        GvtReport = 17,
        GvtBroadcast = 18,
        Stop = 19,
        LpFinished = 20,
        NodeReady = 21,
        Shutdown = 22,
    };

    bool is_valid_kind(std::uint8_t raw) noexcept;
    const char *to_string(MessageKind kind) noexcept;

    using Payload = std::vector<std::byte>;

    // Envelope exchanged between LPs and the controller.
    //
    // Events are identified by (lp_sender, seq_number). Acks swap the routing
    // fields (they travel back to the original sender) but keep seq_number and
    // timestamp, so (lp_receiver, seq_number) of an ack names the acknowledged
    // message.
    struct Message
    {
        MessageKind kind = MessageKind::Event;
        SeqNumber seq_number = 0;
        LpId lp_sender = 0;
        LpId lp_receiver = 0;
        Payload payload{};
        Timestamp timestamp{};

        friend bool operator==(const Message &, const Message &) = default;
    };

    struct EventIdentity
    {
        LpId lp_sender = 0;
        SeqNumber seq_number = 0;

        friend bool operator==(const EventIdentity &, const EventIdentity &) = default;
        friend auto operator<=>(const EventIdentity &, const EventIdentity &) = default;
    };

    inline EventIdentity identity_of(const Message &m) noexcept { return {m.lp_sender, m.seq_number}; }

    struct EventIdentityHash
    {
        std::size_t operator()(const EventIdentity &id) const noexcept
        {
            return std::hash<std::uint64_t>{}(id.seq_number ^ (std::uint64_t{id.lp_sender} * 0x9E3779B97F4A7C15ull));
        }
    };

    // Throws std::invalid_argument unless m is an Event.
    Message make_antimessage(const Message &m);

    // True iff one is an Event and the other its Antimessage (same sender and seq).
    bool annihilates(const Message &a, const Message &b) noexcept;

    // Ack for a received Event or Antimessage, addressed back to its sender.
    Message make_ack(const Message &received, bool marked);

    // Canonical binary encoding, little-endian:
    //   kind:u8 seq:u64 sender:u32 receiver:u32 timestamp:f64 payload_len:u32 payload
    inline constexpr std::size_t kHeaderSize = 1 + 8 + 4 + 4 + 8 + 4;

    std::vector<std::byte> encode(const Message &m);
    void encode_into(const Message &m, std::vector<std::byte> &out);

    class DecodeError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    // Throws DecodeError on truncated input, trailing bytes, unknown kinds or
    // invalid timestamps.
    Message decode(std::span<const std::byte> bytes);

    // PHOLD event payload.
    struct PholdPayload
    {
        EntityId entity_sender = 0;
        EntityId entity_receiver = 0;
        std::uint64_t value = 0;

        friend bool operator==(const PholdPayload &, const PholdPayload &) = default;
    };

    inline constexpr std::size_t kPholdPayloadSize = 16;

    Payload encode_payload(const PholdPayload &p);
    PholdPayload decode_phold_payload(std::span<const std::byte> bytes);

    // 64-bit FNV-1a digest of a payload, used for committed-trace comparison.
    std::uint64_t payload_digest(std::span<const std::byte> bytes) noexcept;

    std::string describe(const Message &m);

    // Little-endian primitive codec shared by the wire formats.
    namespace wire
    {
        void put_u8(std::vector<std::byte> &out, std::uint8_t v);
        void put_u32(std::vector<std::byte> &out, std::uint32_t v);
        void put_u64(std::vector<std::byte> &out, std::uint64_t v);
        void put_f64(std::vector<std::byte> &out, double v);

        class Reader
        {
        public:
            explicit Reader(std::span<const std::byte> bytes) noexcept : bytes_(bytes) {}

            std::uint8_t u8();
            std::uint32_t u32();
            std::uint64_t u64();
            double f64();
            std::span<const std::byte> take(std::size_t n);
            std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

        private:
            std::span<const std::byte> bytes_;
            std::size_t pos_ = 0;
        };
    }
}
