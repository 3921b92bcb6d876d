#pragma once

#include <stdexcept>
#include <string>

namespace qrf {

enum class ErrorCode {
  GridTooNarrow,
  NonPositiveWidth,
  NonFiniteSample,
  NotNormalized,
  InvalidArgument,
  BadLabel,
  ChartMismatch,
  BinsDoNotCover,
  ClockModelMismatch,
  ZeroMeanMomentum,
  RoughState,
  ConfigError,
  ParseError,
};

const char* to_string(ErrorCode code);

// True for errors raised by numerical operations (as opposed to config/parse
// problems). The CLI maps these to exit status 3.
bool is_numerical(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace qrf
