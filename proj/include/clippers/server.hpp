#pragma once

// Local TCP listener for the session protocol. One SessionService per
// connection, each on its own thread; nothing mutable is shared between
// sessions.

#include <clippers/session.hpp>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <functional>
#include <mutex>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace clippers::session {

inline bool send_all(int fd, std::string_view bytes) {
    while (!bytes.empty()) {
        const ssize_t n = ::send(fd, bytes.data(), bytes.size(), MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        bytes.remove_prefix(static_cast<std::size_t>(n));
    }
    return true;
}

// Runs one session over a connected socket until EndSession or disconnect.
inline void run_connection(int fd, const LinePath& path, const SessionConfig& config) {
    SessionService service(path, config);
    MessageReader reader;
    char buf[4096];
    while (!service.ended()) {
        const ssize_t n = ::recv(fd, buf, sizeof buf, 0);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) break;
        std::vector<Message> replies;
        try {
            for (const auto& m : reader.feed(std::string_view(buf, static_cast<std::size_t>(n)))) {
                auto r = service.handle(m);
                replies.insert(replies.end(), r.begin(), r.end());
                if (service.ended()) break;
            }
        } catch (const FormatError& e) {
            auto r = service.reject(e.what());
            replies.insert(replies.end(), r.begin(), r.end());
        }
        std::string out;
        for (const auto& m : replies) out += encode(m);
        if (!send_all(fd, out)) break;
    }
    // Half-close and drain so unread input does not turn the close into a
    // reset that discards the final EndSession.
    ::shutdown(fd, SHUT_WR);
    timeval tv{1, 0};
    ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    while (::recv(fd, buf, sizeof buf, 0) > 0) {
    }
}

class SessionServer {
public:
    SessionServer(LinePath path, SessionConfig config) : path_(std::move(path)), config_(std::move(config)) {
        config_.validate_for(path_);
    }
    ~SessionServer() { stop(); }

    SessionServer(const SessionServer&) = delete;
    SessionServer& operator=(const SessionServer&) = delete;

    // Binds 127.0.0.1:port (0 picks a free port) and returns the bound port.
    std::uint16_t listen(std::uint16_t port) {
        listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        if (listen_fd_ < 0) throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
        int one = 1;
        ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(port);
        addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 16) < 0) {
            const std::string err = std::strerror(errno);
            ::close(listen_fd_);
            listen_fd_ = -1;
            throw std::runtime_error("cannot listen on 127.0.0.1:" + std::to_string(port) + ": " + err);
        }
        socklen_t len = sizeof addr;
        ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
        return ntohs(addr.sin_port);
    }

    // Accepts until stop() is called from another thread.
    void serve() {
        while (!stopping_) {
            const int fd = ::accept(listen_fd_, nullptr, nullptr);
            if (fd < 0) {
                if (errno == EINTR) continue;
                break;
            }
            int one = 1;
            ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
            std::lock_guard lock(mu_);
            if (stopping_) {
                ::close(fd);
                break;
            }
            open_.insert(fd);
            workers_.emplace_back([this, fd] {
                run_connection(fd, path_, config_);
                std::lock_guard inner(mu_);
                open_.erase(fd);
                ::close(fd);
            });
        }
    }

    void stop() {
        std::vector<std::thread> workers;
        {
            std::lock_guard lock(mu_);
            if (stopping_.exchange(true) && workers_.empty()) return;
            if (listen_fd_ >= 0) {
                ::shutdown(listen_fd_, SHUT_RDWR);
                ::close(listen_fd_);
                listen_fd_ = -1;
            }
            for (int fd : open_) ::shutdown(fd, SHUT_RDWR);
            workers.swap(workers_);
        }
        for (auto& w : workers) w.join();
    }

private:
    LinePath path_;
    SessionConfig config_;
    std::atomic<int> listen_fd_{-1};
    std::atomic<bool> stopping_{false};
    std::mutex mu_;
    std::set<int> open_;
    std::vector<std::thread> workers_;
};

} // namespace clippers::session
