#pragma once

#include <stdexcept>
#include <string>

namespace tsrnn {

// Error taxonomy used across the library. Invalid covers shape/value/config
// problems, Io covers file access and parse failures, Numeric covers
// non-finite values detected at runtime.
class Error : public std::runtime_error {
public:
  enum class Kind { Invalid, Io, Numeric, Internal };

  Error(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  Kind kind() const { return kind_; }

private:
  Kind kind_;
};

[[noreturn]] inline void throw_invalid(const std::string& msg) {
  throw Error(Error::Kind::Invalid, msg);
}
[[noreturn]] inline void throw_io(const std::string& msg) {
  throw Error(Error::Kind::Io, msg);
}
[[noreturn]] inline void throw_numeric(const std::string& msg) {
  throw Error(Error::Kind::Numeric, msg);
}

}  // namespace tsrnn
