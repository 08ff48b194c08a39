#pragma once

#include <stdexcept>
#include <string>

namespace backstep {

// Base class for all domain errors thrown by the toolkit.  CLI maps these to
// exit code 2 (validation / configuration) unless noted otherwise.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define BACKSTEP_DEFINE_ERROR(Name)                                           \
  class Name : public Error {                                                 \
  public:                                                                     \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {}      \
  }

// plant / grid validation
BACKSTEP_DEFINE_ERROR(NotControllable);
BACKSTEP_DEFINE_ERROR(BadGeometry);
BACKSTEP_DEFINE_ERROR(BadDimension);
BACKSTEP_DEFINE_ERROR(GridMismatch);

// gain synthesis
BACKSTEP_DEFINE_ERROR(PolesNotConjugateClosed);
BACKSTEP_DEFINE_ERROR(NotHurwitz);
BACKSTEP_DEFINE_ERROR(AsymmetricQ);
BACKSTEP_DEFINE_ERROR(MarginTooSmall);

// kernel solver
BACKSTEP_DEFINE_ERROR(OutOfDomain);
BACKSTEP_DEFINE_ERROR(NegativeArgument);
BACKSTEP_DEFINE_ERROR(NoConvergenceBudget);

// transform / simulation / analysis
BACKSTEP_DEFINE_ERROR(SingularTransform);
BACKSTEP_DEFINE_ERROR(StepUnstable);
BACKSTEP_DEFINE_ERROR(NonPositiveValues);

// configuration
BACKSTEP_DEFINE_ERROR(ConfigError);

#undef BACKSTEP_DEFINE_ERROR

}  // namespace backstep
