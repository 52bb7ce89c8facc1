#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace nysadmm {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes disagree. `what()` names the offending dimension.
class DimensionError : public Error {
public:
  DimensionError(const std::string& what_dim, Index expected, Index actual)
      : Error(what_dim + ": expected " + std::to_string(expected) + ", got " +
              std::to_string(actual)),
        expected_(expected), actual_(actual) {}

  Index expected() const { return expected_; }
  Index actual() const { return actual_; }

private:
  Index expected_;
  Index actual_;
};

/// An argument violates a documented precondition.
class ValidationError : public Error {
public:
  explicit ValidationError(const std::string& msg) : Error(msg) {}
};

/// The shifted Cholesky factorization of a Nystrom sketch failed twice.
class RankDeficientSketch : public Error {
public:
  explicit RankDeficientSketch(const std::string& msg) : Error(msg) {}
};

/// A non-finite value showed up inside an iterative solver.
class NumericalBreakdown : public Error {
public:
  NumericalBreakdown(const std::string& msg, Index iteration)
      : Error(msg + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}

  Index iteration() const { return iteration_; }

private:
  Index iteration_;
};

namespace detail {

inline void check_dim(const char* what, Index expected, Index actual) {
  if (expected != actual) throw DimensionError(what, expected, actual);
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.derived().array().isFinite().all();
}

/// Distance from |x| to the next larger representable number (MATLAB's eps(x)).
template <typename Scalar>
Scalar eps_of(Scalar x) {
  x = std::abs(x);
  return std::nextafter(x, std::numeric_limits<Scalar>::infinity()) - x;
}

}  // namespace detail

/// Dense matrix with i.i.d. standard normal entries, filled column by column.
template <typename Scalar, typename Rng>
Matrix<Scalar> gaussian_matrix(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<Scalar> normal(Scalar(0), Scalar(1));
  Matrix<Scalar> out(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) out(i, j) = normal(rng);
  return out;
}

}  // namespace nysadmm
