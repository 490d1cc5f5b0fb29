#include "morphkit/error.hpp"

namespace morphkit {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io: return "io";
    case ErrorKind::Format: return "format";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::Adapter: return "adapter";
    case ErrorKind::Precondition: return "precondition";
  }
  return "unknown";
}

}  // namespace morphkit
