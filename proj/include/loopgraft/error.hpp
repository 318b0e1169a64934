#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace loopgraft {

enum class ErrorCode {
  // structure_io
  NoAtoms,
  MalformedRecord,
  InvalidId,
  NotFound,
  NetworkFailure,
  UnknownChain,
  // secondary_structure
  MissingBackbone,
  RangeOutOfChain,
  InvertedRange,
  // loops
  TooFewSegments,
  NoAperiodicContent,
  UnknownLoop,
  // geometry
  DegenerateSegment,
  EmptyInsertSet,
  // dynamics
  DisconnectedContactGraph,
  IllConditioned,
  TooFewResidues,
  EmptyElement,
  LengthMismatch,
  UnknownMetric,
  // grafting
  DegenerateRange,
  MissingAnchorAtoms,
  ClippedAnchor,
  AdapterLaunchFailure,
  AdapterParseFailure,
  AdapterTimeout,
  MissingScoreKey,
  // orchestration
  GateUnsatisfied,
  EmptySpecs,
  SchemaVersionMismatch,
  UnknownSession,
  UnknownJob,
  BadRequest,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-readable code; the service maps codes to
/// HTTP statuses and the CLI prints `code: message`.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace loopgraft
