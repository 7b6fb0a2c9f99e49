#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sflplan {

/// Base class for every error raised by the planner.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the function (e.g. a cut-layer
/// beyond the model depth, a nonpositive compute power).
class DomainError : public Error {
public:
  using Error::Error;
};

class InvalidProfileError : public Error {
public:
  using Error::Error;
};

/// A regression could not be fitted. `curve()` names the offending curve
/// ("size", "flops", "kappa" or "smashed").
class FitFailureError : public Error {
public:
  FitFailureError(std::string curve, const std::string& what)
      : Error("fit failure [" + curve + "]: " + what), curve_(std::move(curve)) {}
  const std::string& curve() const noexcept { return curve_; }

private:
  std::string curve_;
};

/// Malformed input file. `byte_offset()` is the parser's position, 0 when
/// the failure is not positional (e.g. unreadable file).
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t byte_offset)
      : Error(what), byte_offset_(byte_offset) {}
  std::size_t byte_offset() const noexcept { return byte_offset_; }

private:
  std::size_t byte_offset_;
};

class UndefinedRError : public Error {
public:
  using Error::Error;
};

/// The stationarity solve was invoked on an instance whose derivative does
/// not change sign on the admissible interval.
class CaseMismatchError : public Error {
public:
  using Error::Error;
};

/// A target latency is not reachable for a client with any finite server
/// allocation.
class InfeasibleTargetError : public Error {
public:
  using Error::Error;
};

/// No group split produced a feasible allocation. Carries one diagnostic
/// line per candidate split.
class InfeasibleError : public Error {
public:
  InfeasibleError(const std::string& what, std::vector<std::string> diagnostics)
      : Error(what), diagnostics_(std::move(diagnostics)) {}
  const std::vector<std::string>& diagnostics() const noexcept { return diagnostics_; }

private:
  std::vector<std::string> diagnostics_;
};

/// Inputs that are structurally inconsistent with each other (a plan that
/// does not match its scenario, a missing allocation).
class ValidationError : public Error {
public:
  using Error::Error;
};

}  // namespace sflplan
