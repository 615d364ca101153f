#pragma once

#include <stdexcept>
#include <string>

namespace tapplan {

// Malformed input document (bad JSON, missing keys, wrong types).
class ParseError : public std::runtime_error {
public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// A condition or state names a feature/value the knowledge base does not declare.
class ReferenceError : public std::runtime_error {
public:
  explicit ReferenceError(const std::string& what) : std::runtime_error(what) {}
};

// Knowledge base failed invariant validation.
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// A reachable state has an unpreempted failure transition and no action can
// guard it (either no applicable action beats the failure deadline, or the
// derived deadline leaves no room for the test-action pair to run).
class UnguardableStateError : public std::runtime_error {
public:
  UnguardableStateError(const std::string& what, std::string witness)
      : std::runtime_error(what), witness_(std::move(witness)) {}
  const std::string& witness() const { return witness_; }

private:
  std::string witness_;
};

class PlanningError : public std::runtime_error {
public:
  explicit PlanningError(const std::string& what) : std::runtime_error(what) {}
};

class SchedulingError : public std::runtime_error {
public:
  SchedulingError(const std::string& what, double final_utilization)
      : std::runtime_error(what), final_utilization_(final_utilization) {}
  double final_utilization() const { return final_utilization_; }

private:
  double final_utilization_ = 0.0;
};

class SimulationError : public std::runtime_error {
public:
  explicit SimulationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tapplan
