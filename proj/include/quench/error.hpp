#pragma once

#include <stdexcept>
#include <string>

namespace quench {

// Base for every failure raised by the library. Each subclass maps to one
// documented failure mode so callers (and the CLI exit codes) can react.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CriticalRegimeViolation : public Error { using Error::Error; };
class DomainError : public Error { using Error::Error; };
class ConvergenceFailure : public Error { using Error::Error; };
class RootBracketFailure : public Error { using Error::Error; };
class GridTooCoarse : public Error { using Error::Error; };
class Theta0NotConverged : public Error { using Error::Error; };
class StepSizeUnderflow : public Error { using Error::Error; };
class NonFiniteIntegrand : public Error { using Error::Error; };
class FitDegenerate : public Error { using Error::Error; };
class ProbeOutOfRange : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };

}  // namespace quench
