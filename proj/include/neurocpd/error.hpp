#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace neurocpd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes or indices do not fit together.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An argument lies outside the domain of the operation (nonpositive barrier
/// entry, zero-norm tensor, out-of-range parameter).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An R x R system could not be solved. `mode` names the factor, `row` the
/// factor row for per-row barrier systems (npos otherwise).
class SingularSystemError : public Error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  SingularSystemError(std::size_t mode, std::size_t row, const std::string& what)
      : Error(what), mode_(mode), row_(row) {}

  std::size_t mode() const noexcept { return mode_; }
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t mode_;
  std::size_t row_;
};

/// A solver produced non-finite values.
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t iteration, const std::string& what)
      : Error(what), iteration_(iteration) {}

  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

/// A step-size control loop ran out of reductions (Armijo backtracking or
/// interior-point halving).
class StallError : public Error {
 public:
  using Error::Error;
};

/// A generator could not satisfy its constraints.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace neurocpd
