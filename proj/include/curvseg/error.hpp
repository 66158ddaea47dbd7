#pragma once

#include <stdexcept>
#include <string>

namespace curvseg {

/// Failure categories surfaced by the library. The CLI maps every one of
/// them to a nonzero exit status.
enum class ErrorCode {
  InvalidArgument,
  DimsMismatch,
  NoCenterline,
  NoEligibleCells,
  StepSize,
  ReconnectorContract,
  Divergence,
  DegenerateImage,
  EmptySurface,
  ModelLoad,
  ModelSignature,
  ModelOutput,
  Io,
  Config,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace curvseg
