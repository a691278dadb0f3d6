#include "kanele/error.hpp"

namespace kanele {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "E_ARGUMENT";
    case ErrorCode::config: return "E_CONFIG";
    case ErrorCode::data: return "E_DATA";
    case ErrorCode::schema: return "E_SCHEMA";
    case ErrorCode::invariant: return "E_INVARIANT";
    case ErrorCode::overflow: return "E_OVERFLOW";
    case ErrorCode::numeric: return "E_NUMERIC";
    case ErrorCode::io: return "E_IO";
  }
  return "E_UNKNOWN";
}

}  // namespace kanele
