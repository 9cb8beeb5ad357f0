#pragma once

#include <cstdint>

#include "qpsbgd/linalg.hpp"
#include "qpsbgd/qubo.hpp"

namespace qpsbgd {

/// Columns u_i (n x m) and targets v (length m) of the binary map
///   argmin_{g in {-1,1}^n} sum_i (v_i - g^T u_i)^2.
class BinaryMapInput {
 public:
  BinaryMapInput(Matrix columns, Vector targets);

  /// Training instantiation: u_i = j_i / |j_i|^2 for each Jacobian column
  /// j_i; columns with |j_i| < kMinJacobianNorm are dropped together with
  /// their target. Throws SingularInputError if nothing remains.
  static BinaryMapInput from_jacobian(const Matrix& jacobian, const Vector& output_gradient);

  Eigen::Index spins() const { return columns_.rows(); }
  Eigen::Index terms() const { return columns_.cols(); }
  const Matrix& columns() const { return columns_; }
  const Vector& targets() const { return targets_; }

 private:
  Matrix columns_;
  Vector targets_;
};

inline constexpr double kMinJacobianNorm = 1e-12;

/// Residual objective sum_i (v_i - g^T u_i)^2 for any real g.
double binary_map_objective(const BinaryMapInput& input, const Vector& g);

/// Q = sum_i u_i u_i^T, s = -2 sum_i v_i u_i, offset = sum_i v_i^2, so that
/// energy(build_qubo(input), g) equals binary_map_objective(input, g).
QuboProblem build_qubo(const BinaryMapInput& input);

/// The solver's best spin vector for build_qubo(input). Solver failures are
/// rethrown as SolverError carrying the problem dimensions.
SpinVector binary_map(const BinaryMapInput& input, const QuboSolver& solver, std::uint64_t seed = 0);

/// Minimum-norm least-squares b of  min_b sum_i (v_i - b^T u_i)^2.
/// Throws SingularInputError if any column u_i is zero.
Vector relaxed_map(const BinaryMapInput& input);

}  // namespace qpsbgd
