#ifndef GMRF_ERROR_HPP_
#define GMRF_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace gmrf {

/// Base class of every error raised by the library. `kind()` is a short
/// machine-readable tag ("parse.header", "game.size", ...) used by the CLI
/// when it prints an error line.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

/// Precondition violated by the caller (bad sizes, out-of-range values).
class InvalidArgument : public Error {
 public:
  InvalidArgument(std::string kind, const std::string& what) : Error(std::move(kind), what) {}
};

/// Malformed PNM input.
class ParseError : public Error {
 public:
  enum class Reason { kHeader, kMaxval, kTruncated };

  ParseError(Reason reason, const std::string& what)
      : Error(reason_tag(reason), what), reason_(reason) {}

  Reason reason() const noexcept { return reason_; }

 private:
  static std::string reason_tag(Reason r) {
    switch (r) {
      case Reason::kHeader: return "parse.header";
      case Reason::kMaxval: return "parse.maxval";
      case Reason::kTruncated: return "parse.truncated";
    }
    return "parse";
  }
  Reason reason_;
};

/// Malformed checkpoint, config or CSV input.
class FormatError : public Error {
 public:
  FormatError(std::string kind, const std::string& what) : Error(std::move(kind), what) {}
};

/// A numerical routine could not proceed (singular system, empty component).
class NumericalError : public Error {
 public:
  NumericalError(std::string kind, const std::string& what) : Error(std::move(kind), what) {}
};

namespace detail {

inline void require(bool cond, const char* kind, const std::string& what) {
  if (!cond) throw InvalidArgument(kind, what);
}

}  // namespace detail
}  // namespace gmrf

#endif  // GMRF_ERROR_HPP_
