#pragma once

#include <stdexcept>
#include <string>

namespace retro {

// Base of every exception thrown by the library. Each subclass names one
// failure class so callers (and the CLI exit-code mapping) can dispatch on it.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define RETRO_DECLARE_ERROR(Name)          \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  }

RETRO_DECLARE_ERROR(SyntaxError);
RETRO_DECLARE_ERROR(ValenceError);
RETRO_DECLARE_ERROR(MappingError);
RETRO_DECLARE_ERROR(CenterError);
RETRO_DECLARE_ERROR(RewriteError);
RETRO_DECLARE_ERROR(InfeasibleSplit);
RETRO_DECLARE_ERROR(ShapeError);
RETRO_DECLARE_ERROR(NonFinite);
RETRO_DECLARE_ERROR(MissingEdge);
RETRO_DECLARE_ERROR(EmptyNegatives);
RETRO_DECLARE_ERROR(TooFewSamples);
RETRO_DECLARE_ERROR(IoError);
RETRO_DECLARE_ERROR(FormatError);

#undef RETRO_DECLARE_ERROR

}  // namespace retro
