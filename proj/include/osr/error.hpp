#pragma once

#include <stdexcept>
#include <string>

namespace osr {

enum class ErrorCode {
  Config = 2,
  Infeasible = 3,
  Numerical = 4,
  Invalid = 5,
  Io = 6,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace osr
