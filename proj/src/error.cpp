#include "nash_adm/error.hpp"

namespace nash_adm {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInput: return "input error";
    case ErrorCode::kConfig: return "config error";
    case ErrorCode::kNumericOverflow: return "numeric overflow";
    case ErrorCode::kNonContraction: return "non-contraction";
    case ErrorCode::kInvariant: return "invariant violation";
    case ErrorCode::kIo: return "i/o error";
  }
  return "unknown error";
}

}  // namespace nash_adm
