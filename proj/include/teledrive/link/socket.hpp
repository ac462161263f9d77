#pragma once

// Thin POSIX socket wrappers: a TCP stream for control frames and a UDP socket
// for state and clock datagrams. Non-blocking reads; IPv4 only.

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace teledrive::link {

struct SocketError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() { reset(); }

  int get() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_{-1};
};

namespace socket_detail {

inline sockaddr_in address(const std::string& host, int port) {
  sockaddr_in a{};
  a.sin_family = AF_INET;
  a.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &a.sin_addr) != 1) throw SocketError("bad IPv4 address: " + host);
  return a;
}

inline void nonblocking(int fd) {
  const int flags = ::fcntl(fd, F_GETFL, 0);
  if (flags < 0 || ::fcntl(fd, F_SETFL, flags | O_NONBLOCK) < 0) throw SocketError("fcntl failed");
}

inline std::string last_error(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

}  // namespace socket_detail

/// Connected TCP stream.
class TcpStream {
 public:
  TcpStream() = default;
  explicit TcpStream(Fd fd) : fd_(std::move(fd)) {
    socket_detail::nonblocking(fd_.get());
    int one = 1;
    ::setsockopt(fd_.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  }

  static TcpStream connect(const std::string& host, int port) {
    Fd fd(::socket(AF_INET, SOCK_STREAM, 0));
    if (!fd.valid()) throw SocketError(socket_detail::last_error("socket"));
    const sockaddr_in a = socket_detail::address(host, port);
    if (::connect(fd.get(), reinterpret_cast<const sockaddr*>(&a), sizeof a) != 0)
      throw SocketError(socket_detail::last_error("connect"));
    return TcpStream(std::move(fd));
  }

  /// Sends everything or throws; false once the peer has gone.
  bool send_all(const std::string& bytes) {
    std::size_t off = 0;
    while (off < bytes.size()) {
      const ssize_t n = ::send(fd_.get(), bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
      if (n > 0) {
        off += static_cast<std::size_t>(n);
      } else if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) {
        pollfd p{fd_.get(), POLLOUT, 0};
        ::poll(&p, 1, 100);
      } else if (n < 0 && errno == EINTR) {
        continue;
      } else {
        closed_ = true;
        return false;
      }
    }
    return true;
  }

  /// Whatever bytes are available right now.
  std::string receive() {
    std::string out;
    char buf[4096];
    for (;;) {
      const ssize_t n = ::recv(fd_.get(), buf, sizeof buf, 0);
      if (n > 0) {
        out.append(buf, static_cast<std::size_t>(n));
      } else if (n == 0) {
        closed_ = true;
        break;
      } else if (errno == EINTR) {
        continue;
      } else {
        if (errno != EAGAIN && errno != EWOULDBLOCK) closed_ = true;
        break;
      }
    }
    return out;
  }

  bool closed() const { return closed_; }
  bool valid() const { return fd_.valid(); }
  void close() { fd_.reset(); }

 private:
  Fd fd_;
  bool closed_{false};
};

class TcpListener {
 public:
  TcpListener(const std::string& host, int port) : fd_(::socket(AF_INET, SOCK_STREAM, 0)) {
    if (!fd_.valid()) throw SocketError(socket_detail::last_error("socket"));
    int one = 1;
    ::setsockopt(fd_.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    const sockaddr_in a = socket_detail::address(host, port);
    if (::bind(fd_.get(), reinterpret_cast<const sockaddr*>(&a), sizeof a) != 0)
      throw SocketError(socket_detail::last_error("bind"));
    if (::listen(fd_.get(), 1) != 0) throw SocketError(socket_detail::last_error("listen"));
  }

  /// Waits up to timeout_ms for a client.
  std::optional<TcpStream> accept(int timeout_ms) {
    pollfd p{fd_.get(), POLLIN, 0};
    if (::poll(&p, 1, timeout_ms) <= 0) return std::nullopt;
    Fd c(::accept(fd_.get(), nullptr, nullptr));
    if (!c.valid()) return std::nullopt;
    return TcpStream(std::move(c));
  }

  int port() const {
    sockaddr_in a{};
    socklen_t len = sizeof a;
    ::getsockname(fd_.get(), reinterpret_cast<sockaddr*>(&a), &len);
    return ntohs(a.sin_port);
  }

 private:
  Fd fd_;
};

/// UDP endpoint. A bound socket learns its peer from the first datagram.
class UdpSocket {
 public:
  static UdpSocket bind(const std::string& host, int port) {
    UdpSocket s;
    const sockaddr_in a = socket_detail::address(host, port);
    if (::bind(s.fd_.get(), reinterpret_cast<const sockaddr*>(&a), sizeof a) != 0)
      throw SocketError(socket_detail::last_error("bind"));
    return s;
  }

  static UdpSocket connect(const std::string& host, int port) {
    UdpSocket s;
    s.peer_ = socket_detail::address(host, port);
    return s;
  }

  bool has_peer() const { return peer_.has_value(); }

  void send(const std::string& payload) {
    if (!peer_) return;
    ::sendto(fd_.get(), payload.data(), payload.size(), 0, reinterpret_cast<const sockaddr*>(&*peer_), sizeof *peer_);
  }

  std::vector<std::string> receive() {
    std::vector<std::string> out;
    char buf[2048];
    for (;;) {
      sockaddr_in from{};
      socklen_t len = sizeof from;
      const ssize_t n = ::recvfrom(fd_.get(), buf, sizeof buf, 0, reinterpret_cast<sockaddr*>(&from), &len);
      if (n < 0) break;
      if (!peer_) peer_ = from;
      out.emplace_back(buf, static_cast<std::size_t>(n));
    }
    return out;
  }

  int port() const {
    sockaddr_in a{};
    socklen_t len = sizeof a;
    ::getsockname(fd_.get(), reinterpret_cast<sockaddr*>(&a), &len);
    return ntohs(a.sin_port);
  }

 private:
  UdpSocket() : fd_(::socket(AF_INET, SOCK_DGRAM, 0)) {
    if (!fd_.valid()) throw SocketError(socket_detail::last_error("socket"));
    socket_detail::nonblocking(fd_.get());
  }
  Fd fd_;
  std::optional<sockaddr_in> peer_;
};

}  // namespace teledrive::link
