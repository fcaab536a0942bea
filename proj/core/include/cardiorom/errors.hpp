#pragma once

#include <stdexcept>
#include <string>

namespace cardiorom {

// Two broad families, mapped to distinct CLI exit codes: bad input (2) and
// numerical failure (3).
enum class ErrorClass { Validation, Numerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), class_(cls), kind_(std::move(kind)) {}

  ErrorClass error_class() const noexcept { return class_; }
  const std::string& kind() const noexcept { return kind_; }

 private:
  ErrorClass class_;
  std::string kind_;
};

#define CARDIOROM_DEFINE_ERROR(Name, Class)                              \
  class Name : public Error {                                            \
   public:                                                               \
    explicit Name(const std::string& what) : Error(Class, #Name, what) {} \
  }

CARDIOROM_DEFINE_ERROR(ValidationError, ErrorClass::Validation);
CARDIOROM_DEFINE_ERROR(ParseError, ErrorClass::Validation);
CARDIOROM_DEFINE_ERROR(GridError, ErrorClass::Validation);
CARDIOROM_DEFINE_ERROR(ConstraintViolation, ErrorClass::Validation);
CARDIOROM_DEFINE_ERROR(DomainError, ErrorClass::Numerical);
CARDIOROM_DEFINE_ERROR(NonConvergence, ErrorClass::Numerical);
CARDIOROM_DEFINE_ERROR(NoBracket, ErrorClass::Numerical);
CARDIOROM_DEFINE_ERROR(NoSolution, ErrorClass::Numerical);
CARDIOROM_DEFINE_ERROR(NotPositiveDefinite, ErrorClass::Numerical);
CARDIOROM_DEFINE_ERROR(DegenerateData, ErrorClass::Numerical);
CARDIOROM_DEFINE_ERROR(DegenerateHull, ErrorClass::Numerical);
CARDIOROM_DEFINE_ERROR(ExhaustedSampling, ErrorClass::Numerical);
CARDIOROM_DEFINE_ERROR(StuckChain, ErrorClass::Numerical);
CARDIOROM_DEFINE_ERROR(SimulationFailed, ErrorClass::Numerical);

#undef CARDIOROM_DEFINE_ERROR

}  // namespace cardiorom
