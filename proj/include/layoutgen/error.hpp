#pragma once

#include <stdexcept>
#include <string>

namespace layoutgen {

enum class Err {
  NegativeEntry,
  NotNormalized,
  TooFewClasses,
  NonFinite,
  MalformedHeader,
  LabelOutOfRange,
  TruncatedPayload,
  ShapeMismatch,
  AllZeroColumn,
  ZeroRow,
  ZeroColumn,
  EmptyEditSet,
  EmptyPyramid,
  TooFewSamples,
  DegenerateComponent,
  DegenerateSample,
  AllZeroAfterClip,
  EmptyPopulation,
  MixedClassCounts,
  DimensionMismatch,
  RegionOutOfBounds,
  BadBackgroundBudget,
  AlphaOutOfRange,
  BadConfig,
};

const char* to_string(Err e);

/// Caller handed us data that breaks a contract (CLI exit code 1).
class ValidationError : public std::runtime_error {
public:
  ValidationError(Err code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  Err code() const { return code_; }

private:
  Err code_;
};

/// External data could not be read or parsed (CLI exit code 2).
class IoError : public std::runtime_error {
public:
  IoError(Err code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  Err code() const { return code_; }

private:
  Err code_;
};

}  // namespace layoutgen
