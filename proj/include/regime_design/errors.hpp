#pragma once

#include <stdexcept>
#include <string>

namespace regime_design {

/// Broad outcome classes. The CLI maps these onto its exit codes.
enum class ErrorKind {
  Other,
  Infeasible,
  Precondition,
  Limit,
};

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, ErrorKind kind = ErrorKind::Other)
      : std::runtime_error(what), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// A regime with mu_r <= Lambda_r was passed where a stable rate is required.
class UnstableRegimeError : public Error {
 public:
  UnstableRegimeError(int regime, double service_rate, double arrival_rate)
      : Error("regime " + std::to_string(regime) + " is unstable: service rate " +
                  std::to_string(service_rate) + " <= arrival rate " +
                  std::to_string(arrival_rate),
              ErrorKind::Precondition),
        regime_(regime) {}

  [[nodiscard]] int regime() const noexcept { return regime_; }

 private:
  int regime_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(what, ErrorKind::Precondition) {}
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& what) : Error(what, ErrorKind::Precondition) {}
};

/// floor((1 - gamma) * n) == 0, so the tail average is over an empty set.
class DegenerateFraction : public Error {
 public:
  explicit DegenerateFraction(const std::string& what) : Error(what, ErrorKind::Precondition) {}
};

class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& what) : Error(what, ErrorKind::Precondition) {}
};

class InfeasibleError : public Error {
 public:
  explicit InfeasibleError(const std::string& what) : Error(what, ErrorKind::Infeasible) {}
};

class LimitError : public Error {
 public:
  explicit LimitError(const std::string& what) : Error(what, ErrorKind::Limit) {}
};

/// Input data problems; carries the source location when known.
class IngestError : public Error {
 public:
  IngestError(const std::string& what, std::string file = {}, long line = 0)
      : Error(format(what, file, line)), file_(std::move(file)), line_(line) {}

  [[nodiscard]] const std::string& file() const noexcept { return file_; }
  [[nodiscard]] long line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& what, const std::string& file, long line) {
    if (file.empty()) return what;
    return file + ":" + std::to_string(line) + ": " + what;
  }

  std::string file_;
  long line_;
};

}  // namespace regime_design
