#pragma once

#include <stdexcept>
#include <string>

namespace ccafuse {

// Exit-code classes used by the command-line front end.
enum class ErrorClass { config = 1, data = 2, numerical = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what)
      : std::runtime_error(what), cls_(cls) {}
  ErrorClass error_class() const noexcept { return cls_; }

 private:
  ErrorClass cls_;
};

#define CCAFUSE_DEFINE_ERROR(Name, cls)                                   \
  class Name : public Error {                                            \
   public:                                                               \
    explicit Name(const std::string& what) : Error(ErrorClass::cls, what) {} \
  };

/// Shapes of inputs do not agree.
CCAFUSE_DEFINE_ERROR(DimensionError, data)
/// Malformed or missing input files.
CCAFUSE_DEFINE_ERROR(DataError, data)
/// Invalid run configuration.
CCAFUSE_DEFINE_ERROR(ConfigError, config)
/// Argument outside its admissible domain.
CCAFUSE_DEFINE_ERROR(DomainError, config)
/// A caller violated a documented precondition (e.g. non-unit weights).
CCAFUSE_DEFINE_ERROR(ContractError, config)
/// A matrix that must be positive definite / invertible is not.
CCAFUSE_DEFINE_ERROR(SingularityError, numerical)
/// A solver hit a degenerate configuration (zero cross matrix, collapsed basis).
CCAFUSE_DEFINE_ERROR(DegenerateError, numerical)
/// Iterative training diverged.
CCAFUSE_DEFINE_ERROR(TrainingError, numerical)
/// A statistic is undefined for the given input (e.g. no comparable pairs).
CCAFUSE_DEFINE_ERROR(UndefinedError, numerical)

#undef CCAFUSE_DEFINE_ERROR

}  // namespace ccafuse
