#pragma once

#include <stdexcept>
#include <string>

namespace boardcal {

/// Failure taxonomy shared by the library and the CLI exit codes.
enum class ErrorCode {
  Unknown = 1,
  InvalidArgument,
  InvalidConfig,
  EmptyCloud,
  DegenerateCluster,
  ZeroMatrix,
  ConstantVector,
  BehindCamera,
  OutOfFov,
  DegenerateConfiguration,
  DivergedRefinement,
  TooFewInliers,
  NoDetections,
  AllZeroScores,
  Diverged,
  ParseError,
  SchemaError,
  IoFailure,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace boardcal
