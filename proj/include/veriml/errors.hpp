#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace veriml {

// Every failure raised by the library derives from Error so the C boundary
// can translate it into a status code with a single catch.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

class GenerationFailure : public Error {
 public:
  using Error::Error;
};

class ProbeSetupError : public Error {
 public:
  using Error::Error;
};

class FundingError : public Error {
 public:
  using Error::Error;
};

class AccessDenied : public Error {
 public:
  using Error::Error;
};

class StateError : public Error {
 public:
  using Error::Error;
};

class SpecIntegrityError : public Error {
 public:
  using Error::Error;
};

class InvariantViolation : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

/// Training finished its epoch budget without meeting the required
/// thresholds. The final metrics travel with the exception.
class TrainingFailure : public Error {
 public:
  TrainingFailure(const std::string& what, std::map<std::string, double> metrics)
      : Error(what), metrics_(std::move(metrics)) {}
  const std::map<std::string, double>& metrics() const { return metrics_; }

 private:
  std::map<std::string, double> metrics_;
};

/// A scenario config failed validation; one message per offending field.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> fields)
      : Error(join(fields)), fields_(std::move(fields)) {}
  const std::vector<std::string>& fields() const { return fields_; }

 private:
  static std::string join(const std::vector<std::string>& fields) {
    std::string out = "invalid config:";
    for (const auto& f : fields) out += "\n  " + f;
    return out;
  }
  std::vector<std::string> fields_;
};

}  // namespace veriml
