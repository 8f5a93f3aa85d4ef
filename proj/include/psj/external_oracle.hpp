#pragma once

// Line protocol for out-of-process classifiers (newline-delimited UTF-8):
//   client: HELLO <d>            server: OK | OK PROBE
//   client: QUERY <b64>          server: +1 | -1
//   client: PROBE <b64>          server: <decimal probability in [0,1]>
// <b64> is base64 of d little-endian IEEE-754 doubles. Anything else is a
// protocol error.

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <sys/types.h>
#include <vector>

#include "psj/oracle.hpp"

namespace psj {

std::string base64_encode(std::string_view bytes);
/// Throws ProtocolError on characters outside the alphabet or bad padding.
std::string base64_decode(std::string_view text);

std::string encode_point(std::span<const double> x);
PointVec decode_point(std::string_view b64);

/// Bidirectional line transport over a pair of file descriptors, optionally
/// owning a child process.
class LineChannel {
 public:
  LineChannel(int read_fd, int write_fd, pid_t child = -1, int timeout_ms = 30000);
  ~LineChannel();
  LineChannel(const LineChannel&) = delete;
  LineChannel& operator=(const LineChannel&) = delete;

  void send_line(std::string_view line);
  /// Next line without the trailing newline; nullopt on clean EOF.
  /// Throws TransportError on timeout or I/O failure.
  std::optional<std::string> recv_line();
  void set_timeout_ms(int ms) noexcept { timeout_ms_ = ms; }

 private:
  int read_fd_;
  int write_fd_;
  pid_t child_;
  int timeout_ms_;
  std::string buffer_;
};

/// Opens "exec:<shell command>", "tcp:<host>:<port>" or "fd:<in>,<out>".
std::unique_ptr<LineChannel> open_channel(const std::string& address, int timeout_ms = 30000);

class ExternalOracle final : public Oracle {
 public:
  ExternalOracle(std::unique_ptr<LineChannel> channel, int dim);
  bool has_probe() const override { return probe_advertised_; }

 protected:
  Label do_query(std::span<const double> x) override;
  double do_probe(std::span<const double> x) const override;

 private:
  std::string round_trip(const std::string& line) const;

  mutable std::mutex io_mu_;
  std::unique_ptr<LineChannel> channel_;
  bool probe_advertised_ = false;
};

OraclePtr external_oracle(const std::string& address, int dim, int timeout_ms = 30000);

/// Serves `oracle` over the line protocol until EOF on the channel.
/// Malformed requests get an "ERR <reason>" line and the loop continues.
void serve_oracle(Oracle& oracle, LineChannel& channel);

}  // namespace psj
