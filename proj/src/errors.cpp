#include "randumb/errors.hpp"

namespace randumb {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kData: return "data";
    case ErrorKind::kFormat: return "format";
    case ErrorKind::kInsufficientData: return "insufficient-data";
    case ErrorKind::kEmptyModel: return "empty-model";
    case ErrorKind::kNumerical: return "numerical";
    case ErrorKind::kSingularUpdate: return "singular-update";
    case ErrorKind::kUnsupported: return "unsupported";
    case ErrorKind::kContract: return "contract";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message,
             std::optional<std::size_t> pivot)
    : std::runtime_error(message), kind_(kind), pivot_(pivot) {}

Error Error::with_context(std::string_view context) const {
  std::string msg(context);
  msg += ": ";
  msg += what();
  return Error(kind_, msg, pivot_);
}

void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace randumb
