#pragma once

#include <stdexcept>
#include <string>

namespace pipesched {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define PIPESCHED_DEFINE_ERROR(Name)          \
  class Name : public Error {                 \
   public:                                    \
    using Error::Error;                       \
  }

PIPESCHED_DEFINE_ERROR(CyclicGraph);
PIPESCHED_DEFINE_ERROR(DegreeOverflow);
PIPESCHED_DEFINE_ERROR(ConfigError);
PIPESCHED_DEFINE_ERROR(ParseError);
PIPESCHED_DEFINE_ERROR(Infeasible);
PIPESCHED_DEFINE_ERROR(TooLarge);
PIPESCHED_DEFINE_ERROR(FeasibilityError);
PIPESCHED_DEFINE_ERROR(NumericalError);
PIPESCHED_DEFINE_ERROR(DecodeExhausted);
PIPESCHED_DEFINE_ERROR(ShapeError);
PIPESCHED_DEFINE_ERROR(OracleTimeout);

#undef PIPESCHED_DEFINE_ERROR

}  // namespace pipesched
