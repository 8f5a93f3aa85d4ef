#include "psj/external_oracle.hpp"

#include <array>
#include <bit>
#include <cerrno>
#include <charconv>
#include <csignal>
#include <cstdio>
#include <cstring>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

namespace psj {
namespace {

constexpr std::string_view kAlphabet =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int decode_char(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

std::string trim_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

void ignore_sigpipe() {
  static const bool once = [] {
    std::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)once;
}

}  // namespace

std::string base64_encode(std::string_view bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const auto v = (static_cast<unsigned>(static_cast<unsigned char>(bytes[i])) << 16) |
                   (static_cast<unsigned>(static_cast<unsigned char>(bytes[i + 1])) << 8) |
                   static_cast<unsigned>(static_cast<unsigned char>(bytes[i + 2]));
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const auto v = static_cast<unsigned>(static_cast<unsigned char>(bytes[i])) << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += "==";
  } else if (rest == 2) {
    const auto v = (static_cast<unsigned>(static_cast<unsigned char>(bytes[i])) << 16) |
                   (static_cast<unsigned>(static_cast<unsigned char>(bytes[i + 1])) << 8);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::string base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw ProtocolError("base64 length is not a multiple of 4", std::string(text));
  std::string out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    std::array<int, 4> v{};
    int pad = 0;
    for (int j = 0; j < 4; ++j) {
      const char c = text[i + j];
      if (c == '=') {
        if (i + 4 != text.size() || j < 2) throw ProtocolError("misplaced base64 padding", std::string(text));
        v[j] = 0;
        ++pad;
      } else {
        if (pad > 0) throw ProtocolError("misplaced base64 padding", std::string(text));
        v[j] = decode_char(c);
        if (v[j] < 0) throw ProtocolError("invalid base64 character", std::string(text));
      }
    }
    const unsigned word = (static_cast<unsigned>(v[0]) << 18) | (static_cast<unsigned>(v[1]) << 12) |
                          (static_cast<unsigned>(v[2]) << 6) | static_cast<unsigned>(v[3]);
    out += static_cast<char>((word >> 16) & 0xff);
    if (pad < 2) out += static_cast<char>((word >> 8) & 0xff);
    if (pad < 1) out += static_cast<char>(word & 0xff);
  }
  return out;
}

std::string encode_point(std::span<const double> x) {
  std::string bytes(x.size() * 8, '\0');
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(x[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
  }
  return base64_encode(bytes);
}

PointVec decode_point(std::string_view b64) {
  const std::string bytes = base64_decode(b64);
  if (bytes.size() % 8 != 0) throw ProtocolError("point payload is not a whole number of doubles", std::string(b64));
  PointVec out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b)
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + b])) << (8 * b);
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

// ---------------------------------------------------------------------------

LineChannel::LineChannel(int read_fd, int write_fd, pid_t child, int timeout_ms)
    : read_fd_(read_fd), write_fd_(write_fd), child_(child), timeout_ms_(timeout_ms) {
  ignore_sigpipe();
}

LineChannel::~LineChannel() {
  if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
  if (read_fd_ >= 0) ::close(read_fd_);
  if (child_ > 0) {
    int status = 0;
    // Closing stdin normally ends the child; give it a moment, then insist.
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(child_, &status, WNOHANG) == child_) return;
      ::usleep(2000);
    }
    ::kill(child_, SIGTERM);
    ::waitpid(child_, &status, 0);
  }
}

void LineChannel::send_line(std::string_view line) {
  std::string buf(line);
  buf += '\n';
  std::size_t off = 0;
  while (off < buf.size()) {
    const ssize_t n = ::write(write_fd_, buf.data() + off, buf.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("write to oracle failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

std::optional<std::string> LineChannel::recv_line() {
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return trim_cr(std::move(line));
    }
    pollfd pfd{read_fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, timeout_ms_);
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("poll on oracle failed: ") + std::strerror(errno));
    }
    if (ready == 0) throw TransportError("oracle response timed out", buffer_);
    std::array<char, 65536> chunk{};
    const ssize_t n = ::read(read_fd_, chunk.data(), chunk.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("read from oracle failed: ") + std::strerror(errno));
    }
    if (n == 0) {
      if (buffer_.empty()) return std::nullopt;
      std::string line = std::move(buffer_);
      buffer_.clear();
      return trim_cr(std::move(line));
    }
    buffer_.append(chunk.data(), static_cast<std::size_t>(n));
  }
}

std::unique_ptr<LineChannel> open_channel(const std::string& address, int timeout_ms) {
  if (address.rfind("exec:", 0) == 0) {
    const std::string cmd = address.substr(5);
    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) != 0 || ::pipe(from_child) != 0)
      throw TransportError("cannot create pipes for oracle process");
    const pid_t pid = ::fork();
    if (pid < 0) throw TransportError("cannot fork oracle process");
    if (pid == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    return std::make_unique<LineChannel>(from_child[0], to_child[1], pid, timeout_ms);
  }
  if (address.rfind("tcp:", 0) == 0) {
    const std::string rest = address.substr(4);
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos) throw TransportError("tcp address needs host:port: " + address);
    const std::string host = rest.substr(0, colon);
    const std::string port = rest.substr(colon + 1);
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), port.c_str(), &hints, &res) != 0 || res == nullptr)
      throw TransportError("cannot resolve oracle address " + address);
    int fd = -1;
    for (addrinfo* p = res; p != nullptr; p = p->ai_next) {
      fd = ::socket(p->ai_family, p->ai_socktype, p->ai_protocol);
      if (fd < 0) continue;
      if (::connect(fd, p->ai_addr, p->ai_addrlen) == 0) break;
      ::close(fd);
      fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) throw TransportError("cannot connect to oracle at " + address);
    return std::make_unique<LineChannel>(fd, fd, -1, timeout_ms);
  }
  if (address.rfind("fd:", 0) == 0) {
    int in = -1;
    int out = -1;
    if (std::sscanf(address.c_str() + 3, "%d,%d", &in, &out) != 2)
      throw TransportError("fd address must be fd:<in>,<out>");
    return std::make_unique<LineChannel>(in, out, -1, timeout_ms);
  }
  throw TransportError("unknown oracle address scheme: " + address);
}

// ---------------------------------------------------------------------------

ExternalOracle::ExternalOracle(std::unique_ptr<LineChannel> channel, int dim)
    : Oracle(dim), channel_(std::move(channel)) {
  const std::string reply = round_trip("HELLO " + std::to_string(dim));
  if (reply == "OK") {
    probe_advertised_ = false;
  } else if (reply == "OK PROBE") {
    probe_advertised_ = true;
  } else {
    throw ProtocolError("unexpected handshake reply", reply);
  }
}

std::string ExternalOracle::round_trip(const std::string& line) const {
  std::lock_guard lock(io_mu_);
  channel_->send_line(line);
  auto reply = channel_->recv_line();
  if (!reply) throw TransportError("oracle closed the connection");
  return *reply;
}

Label ExternalOracle::do_query(std::span<const double> x) {
  const std::string reply = round_trip("QUERY " + encode_point(x));
  if (reply == "+1") return Label::kTarget;
  if (reply == "-1") return Label::kOther;
  throw ProtocolError("label outside {+1,-1}", reply);
}

double ExternalOracle::do_probe(std::span<const double> x) const {
  const std::string reply = round_trip("PROBE " + encode_point(x));
  double p = 0.0;
  const auto* first = reply.data();
  const auto* last = reply.data() + reply.size();
  const auto res = std::from_chars(first, last, p);
  if (res.ec != std::errc() || res.ptr != last || !(p >= 0.0 && p <= 1.0))
    throw ProtocolError("probe reply is not a probability", reply);
  return p;
}

OraclePtr external_oracle(const std::string& address, int dim, int timeout_ms) {
  return std::make_shared<ExternalOracle>(open_channel(address, timeout_ms), dim);
}

void serve_oracle(Oracle& oracle, LineChannel& channel) {
  channel.set_timeout_ms(-1);
  bool greeted = false;
  while (auto line = channel.recv_line()) {
    const std::string_view req(*line);
    const auto sp = req.find(' ');
    const std::string_view verb = req.substr(0, sp);
    const std::string_view arg = sp == std::string_view::npos ? std::string_view{} : req.substr(sp + 1);
    try {
      if (verb == "HELLO") {
        int d = 0;
        const auto res = std::from_chars(arg.data(), arg.data() + arg.size(), d);
        if (res.ec != std::errc() || d != oracle.dim()) {
          channel.send_line("ERR dimension mismatch");
          continue;
        }
        greeted = true;
        channel.send_line(oracle.has_probe() ? "OK PROBE" : "OK");
      } else if (!greeted) {
        channel.send_line("ERR expected HELLO");
      } else if (verb == "QUERY") {
        channel.send_line(to_int(oracle.query(decode_point(arg))) > 0 ? "+1" : "-1");
      } else if (verb == "PROBE") {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", oracle.probe(decode_point(arg)));
        channel.send_line(buf);
      } else {
        channel.send_line("ERR unknown request");
      }
    } catch (const Error& e) {
      channel.send_line(std::string("ERR ") + e.what());
    }
  }
}

}  // namespace psj
