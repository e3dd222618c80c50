#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace athena {

enum class ErrorCode {
  MalformedLine,
  NonMonotonicTimestamp,
  InvalidPort,
  BadMagic,
  TruncatedRecord,
  UnsupportedLinkType,
  TooFewCaptures,
  InconsistentCaptures,
  NoModalMajority,
  DimensionMismatch,
  ScheduleOverlap,
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Data error raised by the library. `location()` carries the 1-based line
/// number for text formats and the byte offset for pcap input.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> location = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> location() const noexcept { return location_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> location_;
};

}  // namespace athena
