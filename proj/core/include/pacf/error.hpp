#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pacf {

enum class ErrorCode {
  ZeroVector,
  DimensionMismatch,
  InvalidTemperature,
  InvalidArgument,
  EmptyBatch,
  UninitializedPrototype,
  InvalidSpec,
  InvalidConfig,
  InsufficientSamples,
  IoError,
  ParseError,
  MissingArtifact,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above; what()
// is a single line of the form "<CodeName>: <detail>".
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace pacf
