#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace impdiff {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dimension mismatches, dangling node ids, calls that violate a documented
/// precondition on the shape of the inputs.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// An elementary operation produced NaN or Inf; `node()` names the offending
/// tape node.
class NonFiniteError : public Error {
 public:
  NonFiniteError(std::size_t node, const std::string& what)
      : Error(what), node_(node) {}
  std::size_t node() const noexcept { return node_; }

 private:
  std::size_t node_;
};

/// A linear system that had to be solved is numerically singular. For
/// implicit functions this means the implicit function theorem does not apply
/// at the requested point.
class SingularSystemError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver ran out of iterations or could not make progress.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_residual,
                   std::size_t iterations)
      : Error(what), last_residual_(last_residual), iterations_(iterations) {}
  double last_residual() const noexcept { return last_residual_; }
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  double last_residual_;
  std::size_t iterations_;
};

/// Step-size underflow, step budget exhausted, or a non-finite state in a time
/// integrator.
class IntegrationError : public Error {
 public:
  using Error::Error;
};

/// A discrete trajectory produced a non-finite state.
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t step, const std::string& what)
      : Error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// No consistent algebraic initial state could be found for a DAE.
class InitializationError : public Error {
 public:
  using Error::Error;
};

/// Registry lookup miss.
class NotFoundError : public Error {
 public:
  using Error::Error;
};

}  // namespace impdiff
