#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rmfg {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

class OverflowError : public Error {
 public:
  using Error::Error;
};

/// An ODE state left the admissible norm ball; carries the knot where it happened.
class EscapeTimeError : public Error {
 public:
  EscapeTimeError(std::size_t knot, double time, double norm)
      : Error("state norm " + std::to_string(norm) + " exceeded escape threshold at knot " +
              std::to_string(knot) + " (t=" + std::to_string(time) + ")"),
        knot_(knot),
        time_(time) {}

  std::size_t knot() const { return knot_; }
  double time() const { return time_; }

 private:
  std::size_t knot_;
  double time_;
};

class OscillatoryRegimeError : public Error {
 public:
  using Error::Error;
};

class NotApplicableError : public Error {
 public:
  using Error::Error;
};

class H1ViolatedError : public Error {
 public:
  using Error::Error;
};

class BvpUnsolvableError : public Error {
 public:
  using Error::Error;
};

class AccuracyError : public Error {
 public:
  using Error::Error;
};

class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, int iterations, double last_increment)
      : Error(what), iterations_(iterations), last_increment_(last_increment) {}
  int iterations() const { return iterations_; }
  double last_increment() const { return last_increment_; }

 private:
  int iterations_;
  double last_increment_;
};

class EquivalenceViolation : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct Violation {
  std::string field;
  std::string message;
};

/// Raised by model validation; holds every violated invariant, not just the first.
class InvalidModelError : public Error {
 public:
  explicit InvalidModelError(std::vector<Violation> violations)
      : Error(summarize(violations)), violations_(std::move(violations)) {}

  const std::vector<Violation>& violations() const { return violations_; }

 private:
  static std::string summarize(const std::vector<Violation>& v) {
    std::string s = "invalid model:";
    for (const auto& item : v) s += " [" + item.field + ": " + item.message + "]";
    return s;
  }
  std::vector<Violation> violations_;
};

}  // namespace rmfg
