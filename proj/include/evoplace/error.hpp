#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace evoplace {

enum class ErrorCode {
  // bookshelf-io
  MissingFile,
  SyntaxError,
  DanglingPinReference,
  EmptyNetlist,
  InvalidCase,
  IoError,
  NonFiniteCoordinate,
  InvalidSpec,
  // strategy-dsl
  ParseError,
  TypeError,
  MissingOutput,
  BudgetError,
  StrategyRuntimeError,
  // llm-gateway
  AuthError,
  RateLimited,
  Timeout,
  MalformedResponse,
  TransportError,
  InvalidConfig,
  // prompt-pipeline
  ExtractionError,
  ValidationError,
  MissingSlot,
  // selector
  DegeneratePool,
  ZeroNorm,
  InsufficientPool,
  PoolTooLarge,
  // dse
  SingularCovariance,
  NonFiniteLoss,
  // harness
  CorruptStore,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

/// Every failure the library reports carries a machine-checkable code. Parsers
/// also fill in the 1-based source position when they have one.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, int line = 0, int column = 0);

  ErrorCode code() const noexcept { return code_; }
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  ErrorCode code_;
  int line_;
  int column_;
};

}  // namespace evoplace
