#pragma once

// Minimal POSIX transport for the frame format: a combined TCP+UDP server
// bound to one port, a persistent TCP client connection, and a single-shot
// UDP exchange. TCP carries any frame size up to the limit; UDP is for
// frames within a conservative datagram budget, larger replies come back as
// a FrameTooLarge error steering the caller to TCP.

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cstring>
#include <functional>
#include <thread>

#include "wire.hpp"

namespace zef::net {

using FrameHandler = std::function<wire::Frame(const wire::Frame&)>;

namespace detail {

inline void set_timeout(int fd, int ms) {
    timeval tv{ms / 1000, (ms % 1000) * 1000};
    setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
    setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
}

inline Result<sockaddr_in> resolve(const std::string& host, uint16_t port) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || !res)
        return Error(Err::ConnectionFailed, 0, "cannot resolve " + host);
    sockaddr_in addr = *reinterpret_cast<sockaddr_in*>(res->ai_addr);
    addr.sin_port = htons(port);
    freeaddrinfo(res);
    return addr;
}

inline bool send_all(int fd, const uint8_t* p, size_t n) {
    while (n > 0) {
        ssize_t k = send(fd, p, n, MSG_NOSIGNAL);
        if (k <= 0) return false;
        p += k;
        n -= size_t(k);
    }
    return true;
}

inline bool recv_all(int fd, uint8_t* p, size_t n) {
    while (n > 0) {
        ssize_t k = recv(fd, p, n, 0);
        if (k <= 0) return false;
        p += k;
        n -= size_t(k);
    }
    return true;
}

inline Result<wire::Frame> read_frame(int fd) {
    uint8_t hdr[4];
    if (!recv_all(fd, hdr, 4)) return Err::ConnectionFailed;
    uint32_t len = uint32_t(hdr[0]) | uint32_t(hdr[1]) << 8 | uint32_t(hdr[2]) << 16 |
                   uint32_t(hdr[3]) << 24;
    if (len == 0 || len > wire::kMaxFrame) return Err::FrameTooLarge;
    Bytes body(len);
    if (!recv_all(fd, body.data(), len)) return Err::ConnectionFailed;
    return wire::parse_frame_body(body.data(), body.size());
}

inline bool write_frame(int fd, const wire::Frame& f) {
    Bytes b = wire::frame_bytes(f);
    return send_all(fd, b.data(), b.size());
}

}  // namespace detail

// One request/response exchange per call over a kept-alive TCP connection;
// reconnects transparently after a failure.
class TcpConn {
  public:
    TcpConn(std::string host, uint16_t port, int timeout_ms = 5000)
        : host_(std::move(host)), port_(port), timeout_ms_(timeout_ms) {}
    TcpConn(const TcpConn&) = delete;
    TcpConn(TcpConn&& o) noexcept
        : host_(std::move(o.host_)), port_(o.port_), timeout_ms_(o.timeout_ms_), fd_(o.fd_) {
        o.fd_ = -1;
    }
    ~TcpConn() { reset(); }

    Result<wire::Frame> call(const wire::Frame& f) {
        for (int attempt = 0; attempt < 2; attempt++) {
            if (fd_ < 0) {
                Status s = connect_now();
                if (!s.ok()) return s.error();
            }
            if (detail::write_frame(fd_, f)) {
                auto r = detail::read_frame(fd_);
                if (r.ok()) return r;
            }
            reset();  // stale connection: retry once on a fresh one
        }
        return Error(Err::ConnectionFailed, 0, host_ + ":" + std::to_string(port_));
    }

    void reset() {
        if (fd_ >= 0) close(fd_);
        fd_ = -1;
    }

  private:
    Status connect_now() {
        auto addr = detail::resolve(host_, port_);
        if (!addr.ok()) return addr.error();
        int fd = socket(AF_INET, SOCK_STREAM, 0);
        if (fd < 0) return Error(Err::ConnectionFailed, 0, std::strerror(errno));
        detail::set_timeout(fd, timeout_ms_);
        int one = 1;
        setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
        if (connect(fd, reinterpret_cast<const sockaddr*>(&addr.value()), sizeof(sockaddr_in)) !=
            0) {
            close(fd);
            return Error(Err::ConnectionFailed, 0, std::strerror(errno));
        }
        fd_ = fd;
        return ok_status();
    }

    std::string host_;
    uint16_t port_;
    int timeout_ms_;
    int fd_ = -1;
};

inline Result<wire::Frame> udp_call(const std::string& host, uint16_t port, const wire::Frame& f,
                                    int timeout_ms = 2000) {
    Bytes b = wire::frame_bytes(f);
    if (b.size() > wire::kUdpBudget) return Err::FrameTooLarge;
    auto addr = detail::resolve(host, port);
    if (!addr.ok()) return addr.error();
    int fd = socket(AF_INET, SOCK_DGRAM, 0);
    if (fd < 0) return Error(Err::ConnectionFailed, 0, std::strerror(errno));
    detail::set_timeout(fd, timeout_ms);
    bool sent = sendto(fd, b.data(), b.size(), 0, reinterpret_cast<const sockaddr*>(&addr.value()),
                       sizeof(sockaddr_in)) == ssize_t(b.size());
    if (!sent) {
        close(fd);
        return Error(Err::ConnectionFailed, 0, std::strerror(errno));
    }
    Bytes buf(wire::kUdpBudget + 64);
    ssize_t k = recvfrom(fd, buf.data(), buf.size(), 0, nullptr, nullptr);
    close(fd);
    if (k <= 0) return Err::Timeout;
    buf.resize(size_t(k));
    size_t consumed = 0;
    auto r = wire::parse_frame(buf, consumed);
    if (r.ok() && consumed != buf.size()) return Err::MalformedMessage;
    return r;
}

// TCP acceptor plus UDP responder on the same port number. The handler runs
// on transport threads; callers wanting single-writer semantics wrap it in
// their own lock.
class FrameServer {
  public:
    FrameServer(uint16_t port, FrameHandler handler)
        : port_(port), handler_(std::move(handler)) {}
    ~FrameServer() { stop(); }

    Status start() {
        tcp_fd_ = socket(AF_INET, SOCK_STREAM, 0);
        udp_fd_ = socket(AF_INET, SOCK_DGRAM, 0);
        if (tcp_fd_ < 0 || udp_fd_ < 0) return Error(Err::ConnectionFailed, 0, "socket");
        int one = 1;
        setsockopt(tcp_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = htonl(INADDR_ANY);
        addr.sin_port = htons(port_);
        if (bind(tcp_fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0)
            return Error(Err::ConnectionFailed, 0,
                         "bind tcp :" + std::to_string(port_) + " " + std::strerror(errno));
        if (port_ == 0) {  // ephemeral: discover, then mirror on UDP
            socklen_t len = sizeof(addr);
            getsockname(tcp_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
            port_ = ntohs(addr.sin_port);
        }
        if (bind(udp_fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0)
            return Error(Err::ConnectionFailed, 0,
                         "bind udp :" + std::to_string(port_) + " " + std::strerror(errno));
        if (listen(tcp_fd_, 128) != 0) return Error(Err::ConnectionFailed, 0, "listen");
        detail::set_timeout(tcp_fd_, 200);
        detail::set_timeout(udp_fd_, 200);

        running_ = true;
        accept_thread_ = std::thread([this] { accept_loop(); });
        udp_thread_ = std::thread([this] { udp_loop(); });
        return ok_status();
    }

    void stop() {
        if (!running_.exchange(false)) return;
        if (accept_thread_.joinable()) accept_thread_.join();
        if (udp_thread_.joinable()) udp_thread_.join();
        // connection threads notice running_ within one receive timeout
        while (active_conns_.load() > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
        if (tcp_fd_ >= 0) close(tcp_fd_);
        if (udp_fd_ >= 0) close(udp_fd_);
        tcp_fd_ = udp_fd_ = -1;
    }

    uint16_t port() const { return port_; }

  private:
    void accept_loop() {
        while (running_) {
            int fd = accept(tcp_fd_, nullptr, nullptr);
            if (fd < 0) continue;  // timeout tick or transient error
            detail::set_timeout(fd, 250);
            int one = 1;
            setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
            active_conns_++;
            std::thread([this, fd] {
                serve_conn(fd);
                active_conns_--;
            }).detach();
        }
    }

    void serve_conn(int fd) {
        uint8_t hdr[4];
        while (running_) {
            ssize_t k = recv(fd, hdr, 4, MSG_PEEK);
            if (k == 0) break;  // peer closed
            if (k < 0) {
                if (errno == EAGAIN || errno == EWOULDBLOCK) continue;
                break;
            }
            auto f = detail::read_frame(fd);
            if (!f.ok()) {
                // frame-level garbage gets one error answer, then the
                // connection closes; transport errors just close
                if (f.error().code != Err::ConnectionFailed)
                    detail::write_frame(fd, wire::error_frame(f.error()));
                break;
            }
            if (!detail::write_frame(fd, handler_(f.value()))) break;
        }
        close(fd);
    }

    void udp_loop() {
        Bytes buf(wire::kMaxFrame > (1u << 16) ? (1u << 16) : wire::kMaxFrame);
        while (running_) {
            sockaddr_in peer{};
            socklen_t plen = sizeof(peer);
            ssize_t k = recvfrom(udp_fd_, buf.data(), buf.size(), 0,
                                 reinterpret_cast<sockaddr*>(&peer), &plen);
            if (k <= 0) continue;
            Bytes one(buf.begin(), buf.begin() + k);
            size_t consumed = 0;
            auto f = wire::parse_frame(one, consumed);
            wire::Frame reply = (f.ok() && consumed == one.size())
                                    ? handler_(f.value())
                                    : wire::error_frame(Error(Err::MalformedMessage, 0, "datagram"));
            Bytes out = wire::frame_bytes(reply);
            if (out.size() > wire::kUdpBudget)
                out = wire::frame_bytes(
                    wire::error_frame(Error(Err::FrameTooLarge, out.size(), "use tcp")));
            sendto(udp_fd_, out.data(), out.size(), 0, reinterpret_cast<const sockaddr*>(&peer),
                   plen);
        }
    }

    uint16_t port_;
    FrameHandler handler_;
    int tcp_fd_ = -1, udp_fd_ = -1;
    std::atomic<bool> running_{false};
    std::atomic<int> active_conns_{0};
    std::thread accept_thread_, udp_thread_;
};

}  // namespace zef::net
