#pragma once

#include <stdexcept>
#include <string>

namespace qnn {

// Error categories map one-to-one onto CLI exit codes.
enum class ErrorKind {
  Missing = 3,  // input file does not exist
  Shape = 10,
  Format = 11,
  Version = 12,
  Config = 13,
  Key = 14,
  Io = 15,
  Numeric = 16,
  Domain = 17,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) throw Error(kind, what);
}

}  // namespace qnn
