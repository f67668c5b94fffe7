#pragma once

#include <stdexcept>
#include <string>

namespace sulp {

/// Problems with input data or with the requested design.
class DataError : public std::runtime_error {
 public:
  enum class Kind {
    MissingFile,
    RaggedRow,
    DuplicateColumn,
    NonMonotoneTime,
    BadCell,
    ConstantColumn,
    InsufficientSample,
    MissingColumn,
    InvalidSpec,
    Schema,
    Instability,
  };

  DataError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Failures inside linear algebra or samplers.
class NumericalError : public std::runtime_error {
 public:
  enum class Kind {
    NotSPD,
    KernelNotPD,
    Singular,
    NormalizerZero,
    Divergence,
    SamplerFailure,
    Degenerate,
  };

  NumericalError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace sulp
