#include "athena/errors.hpp"

namespace athena {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::NonMonotonicTimestamp: return "NonMonotonicTimestamp";
    case ErrorCode::InvalidPort: return "InvalidPort";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedRecord: return "TruncatedRecord";
    case ErrorCode::UnsupportedLinkType: return "UnsupportedLinkType";
    case ErrorCode::TooFewCaptures: return "TooFewCaptures";
    case ErrorCode::InconsistentCaptures: return "InconsistentCaptures";
    case ErrorCode::NoModalMajority: return "NoModalMajority";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ScheduleOverlap: return "ScheduleOverlap";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

namespace {

std::string decorate(ErrorCode code, const std::string& message,
                     std::optional<std::size_t> location) {
  std::string out(to_string(code));
  if (location) out += "(" + std::to_string(*location) + ")";
  out += ": ";
  out += message;
  return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message,
             std::optional<std::size_t> location)
    : std::runtime_error(decorate(code, message, location)),
      code_(code),
      location_(location) {}

}  // namespace athena
