#pragma once

#include <chrono>
#include <optional>
#include <stdexcept>
#include <string>

namespace hypmix {

// Root of every error the library throws. Callers that only need a message
// can catch this; the subclasses carry the structured bits.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// environment
class UnrecognizedAction : public Error {
 public:
  explicit UnrecognizedAction(std::string label)
      : Error("unrecognized action: '" + label + "'"), label_(std::move(label)) {}
  const std::string& label() const noexcept { return label_; }

 private:
  std::string label_;
};

class InvalidConstraint : public Error {
 public:
  using Error::Error;
};

class InvalidLabeling : public Error {
 public:
  using Error::Error;
};

// stats
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

class InvalidCells : public Error {
 public:
  using Error::Error;
};

// hypothesis
class MissingSlot : public Error {
 public:
  explicit MissingSlot(std::string slot)
      : Error("template slot '" + slot + "' is not provided by the hypothesis"), slot_(std::move(slot)) {}
  const std::string& slot() const noexcept { return slot_; }

 private:
  std::string slot_;
};

class DuplicateClassId : public Error {
 public:
  explicit DuplicateClassId(const std::string& id) : Error("hypothesis class '" + id + "' already registered") {}
};

class UnknownClass : public Error {
 public:
  explicit UnknownClass(const std::string& id) : Error("unknown hypothesis class '" + id + "'") {}
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

// learner model
class UnknownHypothesis : public Error {
 public:
  explicit UnknownHypothesis(const std::string& id) : Error("unknown hypothesis '" + id + "'") {}
};

class UnknownCharacteristic : public Error {
 public:
  explicit UnknownCharacteristic(const std::string& id) : Error("unknown learner characteristic '" + id + "'") {}
};

class PersonaConflict : public Error {
 public:
  using Error::Error;
};

class InvalidEdit : public Error {
 public:
  using Error::Error;
};

// llm backend
class BackendUnavailable : public Error {
 public:
  using Error::Error;
};

class RateLimited : public Error {
 public:
  RateLimited(std::string what, std::optional<std::chrono::milliseconds> retry_after)
      : Error(std::move(what)), retry_after_(retry_after) {}
  std::optional<std::chrono::milliseconds> retry_after() const noexcept { return retry_after_; }

 private:
  std::optional<std::chrono::milliseconds> retry_after_;
};

class MalformedResponse : public Error {
 public:
  using Error::Error;
};

class NoActionLine : public Error {
 public:
  NoActionLine() : Error("response has no 'ACTION:' line") {}
};

// experiment
class CriterionMismatch : public Error {
 public:
  using Error::Error;
};

class IncompleteResults : public Error {
 public:
  using Error::Error;
};

class InvalidPlan : public Error {
 public:
  using Error::Error;
};

// configuration files
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace hypmix
