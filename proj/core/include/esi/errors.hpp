#pragma once

#include <stdexcept>
#include <string>

namespace esi {

/// Base of every error raised by the library. `kind()` is a stable short tag
/// used in manifests and CSV status columns.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "Error"; }
};

// Data errors: the input is malformed or inconsistent.
class DataError : public Error {
 public:
  using Error::Error;
};

// Numeric errors: the input is well-formed but the computation failed.
class NumericError : public Error {
 public:
  using Error::Error;
};

#define ESI_DEFINE_ERROR(Name, Base)                                    \
  class Name : public Base {                                            \
   public:                                                              \
    using Base::Base;                                                   \
    const char* kind() const noexcept override { return #Name; }        \
  };

ESI_DEFINE_ERROR(ParseError, DataError)
ESI_DEFINE_ERROR(FormatError, DataError)
ESI_DEFINE_ERROR(TopologyError, DataError)
ESI_DEFINE_ERROR(IndexError, DataError)
ESI_DEFINE_ERROR(ShapeError, DataError)
ESI_DEFINE_ERROR(GeometryError, DataError)
ESI_DEFINE_ERROR(SchemaError, DataError)
ESI_DEFINE_ERROR(ValidationError, DataError)
ESI_DEFINE_ERROR(DimensionError, DataError)
ESI_DEFINE_ERROR(LimitError, DataError)

ESI_DEFINE_ERROR(NumericalError, NumericError)
ESI_DEFINE_ERROR(ConvergenceError, NumericError)
ESI_DEFINE_ERROR(LinAlgError, NumericError)
ESI_DEFINE_ERROR(DegenerateError, NumericError)

#undef ESI_DEFINE_ERROR

}  // namespace esi
