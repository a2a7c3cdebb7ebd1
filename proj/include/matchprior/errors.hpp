#pragma once

#include <stdexcept>
#include <string>

namespace matchprior {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define MATCHPRIOR_DEFINE_ERROR(Name)            \
  class Name : public Error {                    \
   public:                                       \
    explicit Name(const std::string& what)       \
        : Error(std::string(#Name ": ") + what) {} \
  }

MATCHPRIOR_DEFINE_ERROR(GridMismatch);
MATCHPRIOR_DEFINE_ERROR(UnbalancedTransport);
MATCHPRIOR_DEFINE_ERROR(DomainError);
MATCHPRIOR_DEFINE_ERROR(InvalidDensity);
MATCHPRIOR_DEFINE_ERROR(InvalidMeasure);
MATCHPRIOR_DEFINE_ERROR(EmptyExtensionBase);
MATCHPRIOR_DEFINE_ERROR(UnboundedLogDensity);
MATCHPRIOR_DEFINE_ERROR(PosteriorUndefined);
MATCHPRIOR_DEFINE_ERROR(ParameterViolation);
MATCHPRIOR_DEFINE_ERROR(CredibilityDeficit);
MATCHPRIOR_DEFINE_ERROR(DegenerateUpdate);
MATCHPRIOR_DEFINE_ERROR(ConfigError);

#undef MATCHPRIOR_DEFINE_ERROR

}  // namespace matchprior
