#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace psj {

/// A point in input space. Coordinates are unconstrained reals.
using PointVec = std::vector<double>;

/// Binary label seen by the attack: +1 is the attacked image's class c,
/// -1 is any other class.
enum class Label : std::int8_t { kOther = -1, kTarget = 1 };

constexpr int to_int(Label l) noexcept { return static_cast<int>(l); }
constexpr Label negate(Label l) noexcept {
  return l == Label::kTarget ? Label::kOther : Label::kTarget;
}

// Error hierarchy. Every engine error derives from psj::Error so the CLI can
// map families onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ProbeAbsent : public Error {
 public:
  using Error::Error;
};

/// Failure to talk to an external oracle (connect, I/O, timeout).
class TransportError : public Error {
 public:
  TransportError(const std::string& what, std::string raw = {})
      : Error(what), raw_line_(std::move(raw)) {}
  const std::string& raw_line() const noexcept { return raw_line_; }

 private:
  std::string raw_line_;
};

/// The peer answered, but not in the line protocol's alphabet.
class ProtocolError : public TransportError {
 public:
  using TransportError::TransportError;
};

class DegeneratePosterior : public Error {
 public:
  using Error::Error;
};

class DegenerateEstimate : public Error {
 public:
  using Error::Error;
};

class InvalidBracket : public Error {
 public:
  using Error::Error;
};

class NoAdversarialFound : public Error {
 public:
  using Error::Error;
};

// Small dense helpers on PointVec. Callers guarantee equal sizes.
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double distance(std::span<const double> a, std::span<const double> b);
/// (1-u)*a + u*b
PointVec lerp(std::span<const double> a, std::span<const double> b, double u);
/// a + c*(b-a)
PointVec extend_from(std::span<const double> a, std::span<const double> b, double c);

}  // namespace psj
