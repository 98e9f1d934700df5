#pragma once

#include <stdexcept>
#include <string>

namespace mdapt {

// Process exit codes shared by every subcommand.
enum class ExitCode : int {
  kOk = 0,
  kDataError = 1,
  kUsageError = 2,
  kNumericError = 3,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ExitCode code() const { return code_; }

 private:
  ExitCode code_;
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what)
      : Error(ExitCode::kDataError, what) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what)
      : Error(ExitCode::kUsageError, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what)
      : Error(ExitCode::kNumericError, what) {}
};

}  // namespace mdapt
