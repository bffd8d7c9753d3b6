#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tobit {

enum class ErrorKind {
  invalid_argument,
  data,
  schema,
  gamma_unidentifiable,
  divergence,
  protocol,
  incomplete_round,
  fold_degenerate,
  diagnostics_unavailable,
  io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, const std::string& what,
                    ErrorKind kind = ErrorKind::invalid_argument) {
  if (!cond) fail(kind, what);
}

}  // namespace tobit
