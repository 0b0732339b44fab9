#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace bbsense {

using Real = double;
using Complex = std::complex<double>;
using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;
using Seed = std::uint64_t;

inline constexpr Real kPi = 3.14159265358979323846;
inline constexpr Real kTwoPi = 2.0 * kPi;

/// Raised when an operation is called outside its documented domain.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical kernel (eigensolver, integrator) fails.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw PreconditionError(message);
}

/// Largest singular value.
template <typename Derived>
typename Derived::RealScalar operator_norm(const Eigen::MatrixBase<Derived>& a) {
  using Plain = typename Derived::PlainObject;
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<Plain> svd(a.eval());
  return svd.singularValues()(0);
}

/// ||U^dagger U - I|| in operator norm.
template <typename Derived>
typename Derived::RealScalar unitarity_defect(const Eigen::MatrixBase<Derived>& u) {
  using Plain = typename Derived::PlainObject;
  const Plain gram = u.adjoint() * u;
  return operator_norm(gram - Plain::Identity(u.cols(), u.cols()));
}

}  // namespace bbsense
