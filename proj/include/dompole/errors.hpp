#pragma once

#include <stdexcept>
#include <string>

namespace dompole {

/// Failure categories shared by the C++ core and the C API. The numeric
/// values are part of the C ABI (see dompole.h) and must not be reordered.
enum class ErrorCode : int {
  Ok = 0,
  InvalidArgument = 1,
  FormatError = 2,
  DimensionMismatch = 3,
  InvalidSpec = 4,
  SingularShift = 5,
  SingularPencil = 6,
  DegenerateEigenvector = 7,
  UnboundedError = 8,
  NotConverged = 9,
  TooLarge = 10,
  InitFailure = 11,
  IoError = 12,
  Internal = 13,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define DOMPOLE_DEFINE_ERROR(Name)                                         \
  class Name : public Error {                                              \
   public:                                                                 \
    explicit Name(const std::string& what) : Error(ErrorCode::Name, what) {} \
  }

DOMPOLE_DEFINE_ERROR(InvalidArgument);
DOMPOLE_DEFINE_ERROR(FormatError);
DOMPOLE_DEFINE_ERROR(DimensionMismatch);
DOMPOLE_DEFINE_ERROR(InvalidSpec);
DOMPOLE_DEFINE_ERROR(SingularShift);
DOMPOLE_DEFINE_ERROR(SingularPencil);
DOMPOLE_DEFINE_ERROR(DegenerateEigenvector);
DOMPOLE_DEFINE_ERROR(UnboundedError);
DOMPOLE_DEFINE_ERROR(TooLarge);
DOMPOLE_DEFINE_ERROR(InitFailure);
DOMPOLE_DEFINE_ERROR(IoError);

#undef DOMPOLE_DEFINE_ERROR

}  // namespace dompole
