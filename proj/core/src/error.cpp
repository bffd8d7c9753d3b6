#include "tobit_iht/error.hpp"

namespace tobit {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::data: return "data";
    case ErrorKind::schema: return "schema";
    case ErrorKind::gamma_unidentifiable: return "gamma-unidentifiable";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::protocol: return "protocol";
    case ErrorKind::incomplete_round: return "incomplete-round";
    case ErrorKind::fold_degenerate: return "fold-degenerate";
    case ErrorKind::diagnostics_unavailable: return "diagnostics-unavailable";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

}  // namespace tobit
