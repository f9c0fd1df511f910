#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace scicomm {

// Base class for everything this library throws. The CLI maps InputError to
// exit code 2, ValidationError to 3 and anything else to 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Problems with reading input at all: missing files, malformed bytes.
class InputError : public Error {
 public:
  using Error::Error;
};

// Input was readable but violates a schema or semantic contract.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public InputError {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : InputError(path + ":" + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class SchemaError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DuplicateIdError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DanglingReferenceError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class OutletMismatchError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DuplicateAnnotationError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class EmptyInputError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class TooFewItemsError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class InfeasibleDesignError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class UnknownTupleError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class IllegalChoiceError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class InsufficientJudgmentsError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NoQualifyingPairsError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class MissingLabelError : public ValidationError {
 public:
  MissingLabelError(const std::string& task, const std::string& instance_id)
      : ValidationError("missing " + task + " label for instance '" +
                        instance_id + "'"),
        task_(task),
        instance_id_(instance_id) {}
  const std::string& task() const { return task_; }
  const std::string& instance_id() const { return instance_id_; }

 private:
  std::string task_;
  std::string instance_id_;
};

class InsufficientDataError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class SingularDesignError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class IdMismatchError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ConstantVectorError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NoLabelFoundError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class UnknownLabelError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class MissingLatentError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Non-fatal diagnostics (NonConvergenceWarning, ConstantVectorWarning,
// EmptyGroupWarning, unknown-field notices). Deduplicated by key so a
// repeated condition is reported once.
class WarningLog {
 public:
  void add(const std::string& key, const std::string& message) {
    for (const auto& k : keys_) {
      if (k == key) return;
    }
    keys_.push_back(key);
    messages_.push_back(message);
  }
  void add(const std::string& message) { add(message, message); }

  const std::vector<std::string>& messages() const { return messages_; }
  bool empty() const { return messages_.empty(); }
  std::size_t size() const { return messages_.size(); }

 private:
  std::vector<std::string> keys_;
  std::vector<std::string> messages_;
};

}  // namespace scicomm
