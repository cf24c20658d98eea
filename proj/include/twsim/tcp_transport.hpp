#pragma once

#include "twsim/messages.hpp"
#include "twsim/transport.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace twsim
{
    // One runner process: where it listens and which LPs it hosts.
    struct NodeSpec
    {
        std::string name;
        std::string host;
        std::uint16_t port = 0;
        LpId first_lp = 0;
        LpId last_lp = 0; // inclusive

        bool hosts(LpId lp) const noexcept { return lp >= first_lp && lp <= last_lp; }
    };

    struct Topology
    {
        std::vector<NodeSpec> nodes;
        std::size_t controller_node = 0;

        // Throws std::invalid_argument unless every LP in [0, num_lps) is
        // hosted by exactly one node and the controller node exists.
        void validate(std::uint32_t num_lps) const;

        // Node hosting `id` (the controller address included). Throws UnknownEndpoint.
        std::size_t node_of(LpId id) const;

        // Looks a node up by name, index or host:port. Throws std::invalid_argument.
        std::size_t find(std::string_view key) const;

        // Every LP on one in-process node.
        static Topology single_node(std::uint32_t num_lps);
    };

    struct TcpOptions
    {
        // How long start() waits for every peer to come up.
        std::chrono::milliseconds connect_timeout{30000};
        // Mid-run reconnect policy: attempts with exponential backoff.
        int retry_attempts = 3;
        std::chrono::milliseconds retry_base{100};
    };

    // TCP backend. Nodes form a full mesh with one persistent connection per
    // node pair: the lower-indexed node dials, announces its index, and both
    // sides then read and write on that socket. Frames are a 4-byte
    // little-endian length followed by the canonical message encoding.
    // Messages for endpoints on this node never touch a socket.
    class TcpTransport final : public Transport
    {
    public:
        TcpTransport(Topology topology, std::size_t self, std::uint32_t num_lps, TcpOptions options = {});
        ~TcpTransport() override;

        TcpTransport(const TcpTransport &) = delete;
        TcpTransport &operator=(const TcpTransport &) = delete;

        // Listens and connects to every peer. Throws TransportError on timeout.
        void start();

        void send(Message m) override;
        std::vector<Message> receive_batch(LpId me, std::size_t max) override;

        // Stops all I/O. Sends after close() are dropped.
        void close();

        std::size_t self() const noexcept { return self_; }
        const Topology &topology() const noexcept { return topology_; }
        std::uint64_t frames_sent() const noexcept { return frames_sent_.load(); }
        std::uint64_t frames_received() const noexcept { return frames_received_.load(); }

    private:
        struct Peer
        {
            std::mutex mu;
            std::condition_variable cv;
            int fd = -1;
            std::uint64_t generation = 0;
        };

        void accept_loop();
        void read_loop(std::size_t peer, int fd, std::uint64_t generation);
        void attach(std::size_t peer, int fd);
        int dial(std::size_t peer, std::chrono::steady_clock::time_point deadline);
        bool write_frame(int fd, const std::vector<std::byte> &frame);
        void deliver_local(Message m);
        void fail(std::exception_ptr e);
        void rethrow_if_failed();

        Topology topology_;
        std::size_t self_;
        std::uint32_t num_lps_;
        TcpOptions options_;

        std::vector<std::unique_ptr<Mailbox>> boxes_;
        std::vector<std::unique_ptr<Peer>> peers_;
        int listen_fd_ = -1;

        std::atomic<bool> closing_{false};
        std::mutex threads_mu_;
        std::vector<std::thread> threads_;
        std::mutex error_mu_;
        std::exception_ptr error_;
        std::atomic<bool> failed_{false};
        std::atomic<std::uint64_t> frames_sent_{0};
        std::atomic<std::uint64_t> frames_received_{0};
    };

    // Binds an ephemeral localhost port and releases it; for tests.
    std::uint16_t pick_free_port();
}
