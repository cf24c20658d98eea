#include "twsim/tcp_transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>

namespace twsim
{
    void Topology::validate(std::uint32_t num_lps) const
    {
        if (nodes.empty())
        {
            throw std::invalid_argument("topology has no nodes");
        }
        if (controller_node >= nodes.size())
        {
            throw std::invalid_argument("controller node index out of range");
        }
        std::vector<int> owners(num_lps, 0);
        for (const auto &n : nodes)
        {
            if (n.first_lp > n.last_lp || n.last_lp >= num_lps)
            {
                throw std::invalid_argument("node " + n.name + " has an invalid LP range");
            }
            for (LpId lp = n.first_lp; lp <= n.last_lp; ++lp)
            {
                ++owners[lp];
            }
        }
        for (LpId lp = 0; lp < num_lps; ++lp)
        {
            if (owners[lp] != 1)
            {
                throw std::invalid_argument("LP " + std::to_string(lp) + " is hosted by " + std::to_string(owners[lp]) +
                                            " nodes (expected 1)");
            }
        }
    }

    std::size_t Topology::node_of(LpId id) const
    {
        if (id == kControllerId)
        {
            return controller_node;
        }
        for (std::size_t i = 0; i < nodes.size(); ++i)
        {
            if (nodes[i].hosts(id))
            {
                return i;
            }
        }
        throw UnknownEndpoint("no node hosts LP " + std::to_string(id));
    }

    std::size_t Topology::find(std::string_view key) const
    {
        for (std::size_t i = 0; i < nodes.size(); ++i)
        {
            const auto &n = nodes[i];
            if (n.name == key || std::to_string(i) == key || n.host + ":" + std::to_string(n.port) == key)
            {
                return i;
            }
        }
        throw std::invalid_argument("unknown node '" + std::string(key) + "'");
    }

    Topology Topology::single_node(std::uint32_t num_lps)
    {
        Topology t;
        t.nodes.push_back(NodeSpec{"local", "127.0.0.1", 0, 0, num_lps - 1});
        return t;
    }

    namespace
    {
        bool read_exact(int fd, void *buf, std::size_t n)
        {
            auto *p = static_cast<char *>(buf);
            while (n > 0)
            {
                const auto got = ::recv(fd, p, n, 0);
                if (got == 0)
                {
                    return false;
                }
                if (got < 0)
                {
                    if (errno == EINTR)
                    {
                        continue;
                    }
                    return false;
                }
                p += got;
                n -= static_cast<std::size_t>(got);
            }
            return true;
        }

        std::uint32_t load_u32(const unsigned char *b)
        {
            return std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) | (std::uint32_t{b[3]} << 24);
        }

        void store_u32(unsigned char *b, std::uint32_t v)
        {
            for (int i = 0; i < 4; ++i)
            {
                b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFFu);
            }
        }

        constexpr std::uint32_t kMaxFrame = 64u << 20;
    }

    TcpTransport::TcpTransport(Topology topology, std::size_t self, std::uint32_t num_lps, TcpOptions options)
        : topology_(std::move(topology)), self_(self), num_lps_(num_lps), options_(options)
    {
        topology_.validate(num_lps);
        if (self >= topology_.nodes.size())
        {
            throw std::invalid_argument("node index out of range");
        }
        boxes_.resize(num_lps + 1);
        const auto &me = topology_.nodes[self];
        for (LpId lp = me.first_lp; lp <= me.last_lp; ++lp)
        {
            boxes_[lp] = std::make_unique<Mailbox>();
        }
        if (topology_.controller_node == self)
        {
            boxes_[num_lps] = std::make_unique<Mailbox>();
        }
        for (std::size_t i = 0; i < topology_.nodes.size(); ++i)
        {
            peers_.push_back(std::make_unique<Peer>());
        }
    }

    TcpTransport::~TcpTransport()
    {
        close();
    }

    void TcpTransport::start()
    {
        const auto deadline = std::chrono::steady_clock::now() + options_.connect_timeout;
        const auto &me = topology_.nodes[self_];

        listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        if (listen_fd_ < 0)
        {
            throw TransportError(std::string("socket: ") + std::strerror(errno));
        }
        int one = 1;
        ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = htonl(INADDR_ANY);
        addr.sin_port = htons(me.port);
        if (::bind(listen_fd_, reinterpret_cast<sockaddr *>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 64) != 0)
        {
            const std::string why = std::strerror(errno);
            throw TransportError("node " + me.name + " cannot listen on port " + std::to_string(me.port) + ": " + why);
        }
        {
            std::lock_guard lock(threads_mu_);
            threads_.emplace_back([this] { accept_loop(); });
        }

        for (std::size_t peer = self_ + 1; peer < topology_.nodes.size(); ++peer)
        {
            const int fd = dial(peer, deadline);
            if (fd < 0)
            {
                throw TransportError("node " + me.name + " could not reach node " + topology_.nodes[peer].name);
            }
            attach(peer, fd);
        }
        for (std::size_t peer = 0; peer < self_; ++peer)
        {
            auto &p = *peers_[peer];
            std::unique_lock lock(p.mu);
            if (!p.cv.wait_until(lock, deadline, [&] { return p.fd >= 0 || failed_.load(); }))
            {
                throw TransportError("node " + topology_.nodes[peer].name + " never connected to node " + me.name);
            }
        }
        rethrow_if_failed();
    }

    int TcpTransport::dial(std::size_t peer, std::chrono::steady_clock::time_point deadline)
    {
        const auto &target = topology_.nodes[peer];
        addrinfo hints{};
        hints.ai_family = AF_INET;
        hints.ai_socktype = SOCK_STREAM;
        const std::string port = std::to_string(target.port);
        do
        {
            addrinfo *res = nullptr;
            if (::getaddrinfo(target.host.c_str(), port.c_str(), &hints, &res) == 0)
            {
                for (addrinfo *ai = res; ai != nullptr; ai = ai->ai_next)
                {
                    const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
                    if (fd < 0)
                    {
                        continue;
                    }
                    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0)
                    {
                        int one = 1;
                        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
                        unsigned char hello[4];
                        store_u32(hello, static_cast<std::uint32_t>(self_));
                        if (::send(fd, hello, sizeof hello, MSG_NOSIGNAL) == static_cast<ssize_t>(sizeof hello))
                        {
                            ::freeaddrinfo(res);
                            return fd;
                        }
                    }
                    ::close(fd);
                }
                ::freeaddrinfo(res);
            }
            if (closing_)
            {
                return -1;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(50));
        } while (std::chrono::steady_clock::now() < deadline);
        return -1;
    }

    void TcpTransport::accept_loop()
    {
        while (!closing_)
        {
            pollfd pfd{listen_fd_, POLLIN, 0};
            const int ready = ::poll(&pfd, 1, 50);
            if (ready <= 0)
            {
                continue;
            }
            const int fd = ::accept(listen_fd_, nullptr, nullptr);
            if (fd < 0)
            {
                continue;
            }
            unsigned char hello[4];
            if (!read_exact(fd, hello, sizeof hello))
            {
                ::close(fd);
                continue;
            }
            const auto peer = load_u32(hello);
            if (peer >= self_)
            {
                // Only lower-indexed nodes dial us.
                ::close(fd);
                continue;
            }
            int one = 1;
            ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
            attach(peer, fd);
        }
    }

    void TcpTransport::attach(std::size_t peer, int fd)
    {
        auto &p = *peers_[peer];
        std::uint64_t generation = 0;
        {
            std::lock_guard lock(p.mu);
            if (p.fd >= 0)
            {
                ::shutdown(p.fd, SHUT_RDWR);
            }
            p.fd = fd;
            generation = ++p.generation;
        }
        p.cv.notify_all();
        std::lock_guard lock(threads_mu_);
        threads_.emplace_back([this, peer, fd, generation] { read_loop(peer, fd, generation); });
    }

    void TcpTransport::read_loop(std::size_t peer, int fd, std::uint64_t generation)
    {
        std::vector<std::byte> buf;
        try
        {
            for (;;)
            {
                unsigned char len_bytes[4];
                if (!read_exact(fd, len_bytes, sizeof len_bytes))
                {
                    break;
                }
                const auto len = load_u32(len_bytes);
                if (len > kMaxFrame)
                {
                    throw TransportError("oversized frame from node " + topology_.nodes[peer].name);
                }
                buf.resize(len);
                if (!read_exact(fd, buf.data(), len))
                {
                    break;
                }
                ++frames_received_;
                deliver_local(decode(buf));
            }
        }
        catch (...)
        {
            if (!closing_)
            {
                fail(std::current_exception());
            }
        }
        auto &p = *peers_[peer];
        {
            std::lock_guard lock(p.mu);
            if (p.fd == fd && p.generation == generation)
            {
                p.fd = -1;
            }
        }
        ::close(fd);
        p.cv.notify_all();
    }

    void TcpTransport::deliver_local(Message m)
    {
        const auto slot = endpoint_slot(m.lp_receiver, num_lps_);
        if (!boxes_[slot])
        {
            throw UnknownEndpoint("node " + topology_.nodes[self_].name + " does not host the receiver of " + describe(m));
        }
        boxes_[slot]->push(std::move(m));
    }

    bool TcpTransport::write_frame(int fd, const std::vector<std::byte> &frame)
    {
        const auto *p = reinterpret_cast<const char *>(frame.data());
        std::size_t left = frame.size();
        while (left > 0)
        {
            const auto n = ::send(fd, p, left, MSG_NOSIGNAL);
            if (n < 0)
            {
                if (errno == EINTR)
                {
                    continue;
                }
                return false;
            }
            p += n;
            left -= static_cast<std::size_t>(n);
        }
        return true;
    }

    void TcpTransport::send(Message m)
    {
        rethrow_if_failed();
        if (closing_)
        {
            return;
        }
        const auto node = topology_.node_of(m.lp_receiver);
        if (node == self_)
        {
            deliver_local(std::move(m));
            return;
        }

        std::vector<std::byte> frame(4);
        encode_into(m, frame);
        store_u32(reinterpret_cast<unsigned char *>(frame.data()), static_cast<std::uint32_t>(frame.size() - 4));

        auto &p = *peers_[node];
        std::unique_lock lock(p.mu);
        for (int attempt = 0;; ++attempt)
        {
            const int fd = p.fd;
            // The socket is written only under p.mu, so frames never interleave.
            if (fd >= 0 && write_frame(fd, frame))
            {
                ++frames_sent_;
                return;
            }
            if (closing_)
            {
                return;
            }
            if (attempt >= options_.retry_attempts)
            {
                throw TransportError("lost connection to node " + topology_.nodes[node].name + " after " +
                                     std::to_string(options_.retry_attempts) + " retries");
            }
            if (fd >= 0)
            {
                ::shutdown(fd, SHUT_RDWR);
            }
            const auto backoff = options_.retry_base * (1 << attempt);
            if (self_ < node)
            {
                lock.unlock();
                std::this_thread::sleep_for(backoff);
                const int fresh = dial(node, std::chrono::steady_clock::now() + backoff);
                if (fresh >= 0)
                {
                    attach(node, fresh);
                }
                lock.lock();
            }
            else
            {
                const auto gen = p.generation;
                p.cv.wait_for(lock, backoff, [&] { return p.generation != gen && p.fd >= 0; });
            }
        }
    }

    std::vector<Message> TcpTransport::receive_batch(LpId me, std::size_t max)
    {
        rethrow_if_failed();
        if (max == 0)
        {
            throw std::invalid_argument("receive_batch: max must be at least 1");
        }
        const auto slot = endpoint_slot(me, num_lps_);
        if (!boxes_[slot])
        {
            throw UnknownEndpoint("endpoint " + std::to_string(me) + " is not hosted on this node");
        }
        return boxes_[slot]->pop_batch(max);
    }

    void TcpTransport::close()
    {
        if (closing_.exchange(true))
        {
            return;
        }
        for (auto &peer : peers_)
        {
            std::lock_guard lock(peer->mu);
            if (peer->fd >= 0)
            {
                ::shutdown(peer->fd, SHUT_RDWR);
            }
        }
        std::vector<std::thread> threads;
        {
            std::lock_guard lock(threads_mu_);
            threads.swap(threads_);
        }
        for (auto &t : threads)
        {
            if (t.joinable())
            {
                t.join();
            }
        }
        if (listen_fd_ >= 0)
        {
            ::close(listen_fd_);
            listen_fd_ = -1;
        }
    }

    void TcpTransport::fail(std::exception_ptr e)
    {
        std::lock_guard lock(error_mu_);
        if (!error_)
        {
            error_ = e;
        }
        failed_ = true;
        for (auto &peer : peers_)
        {
            peer->cv.notify_all();
        }
    }

    void TcpTransport::rethrow_if_failed()
    {
        if (failed_)
        {
            std::lock_guard lock(error_mu_);
            std::rethrow_exception(error_);
        }
    }

    std::uint16_t pick_free_port()
    {
        const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        addr.sin_port = 0;
        socklen_t len = sizeof addr;
        if (fd < 0 || ::bind(fd, reinterpret_cast<sockaddr *>(&addr), sizeof addr) != 0 ||
            ::getsockname(fd, reinterpret_cast<sockaddr *>(&addr), &len) != 0)
        {
            if (fd >= 0)
            {
                ::close(fd);
            }
            throw TransportError("could not find a free port");
        }
        ::close(fd);
        return ntohs(addr.sin_port);
    }
}
