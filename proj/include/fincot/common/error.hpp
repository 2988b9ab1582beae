#pragma once

#include <stdexcept>
#include <string>

namespace fincot {

// Base for all pipeline errors. The CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input, bad config, violated precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A provider could not be reached, or kept failing, after bounded retries.
class ProviderError : public Error {
 public:
  using Error::Error;
};

class RateLimitError : public ProviderError {
 public:
  using ProviderError::ProviderError;
};

class MalformedReplyError : public ProviderError {
 public:
  using ProviderError::ProviderError;
};

// Inputs that should line up (query ids across model files) do not.
class MisalignmentError : public Error {
 public:
  using Error::Error;
};

enum class ExitCode : int {
  kSuccess = 0,
  kFailure = 1,
  kValidation = 2,
  kProvider = 3,
  kMisalignment = 4,
};

}  // namespace fincot
