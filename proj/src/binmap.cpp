#include "qpsbgd/binmap.hpp"

#include <stdexcept>
#include <string>

#include "qpsbgd/errors.hpp"

namespace qpsbgd {

BinaryMapInput::BinaryMapInput(Matrix columns, Vector targets)
    : columns_(std::move(columns)), targets_(std::move(targets)) {
  if (columns_.rows() < 1 || columns_.cols() < 1) {
    throw std::invalid_argument("binary map needs n >= 1 and m >= 1");
  }
  if (columns_.cols() != targets_.size()) {
    throw std::invalid_argument("binary map: " + std::to_string(columns_.cols()) + " columns but " +
                                std::to_string(targets_.size()) + " targets");
  }
  if (!columns_.allFinite() || !targets_.allFinite()) {
    throw std::invalid_argument("binary map inputs must be finite");
  }
}

BinaryMapInput BinaryMapInput::from_jacobian(const Matrix& jacobian, const Vector& output_gradient) {
  if (jacobian.cols() != output_gradient.size()) {
    throw std::invalid_argument("jacobian/output gradient size mismatch");
  }
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < jacobian.cols(); ++i) {
    if (jacobian.col(i).norm() >= kMinJacobianNorm) keep.push_back(i);
  }
  if (keep.empty()) {
    throw SingularInputError("all Jacobian columns vanish");
  }
  Matrix columns(jacobian.rows(), static_cast<Eigen::Index>(keep.size()));
  Vector targets(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const auto i = keep[k];
    const auto c = static_cast<Eigen::Index>(k);
    columns.col(c) = jacobian.col(i) / jacobian.col(i).squaredNorm();
    targets[c] = output_gradient[i];
  }
  return BinaryMapInput(std::move(columns), std::move(targets));
}

double binary_map_objective(const BinaryMapInput& input, const Vector& g) {
  if (g.size() != input.spins()) {
    throw std::invalid_argument("binary map objective: g has wrong length");
  }
  return (input.targets() - input.columns().transpose() * g).squaredNorm();
}

QuboProblem build_qubo(const BinaryMapInput& input) {
  const Matrix& u = input.columns();
  const Vector& v = input.targets();
  Matrix q = u * u.transpose();
  Vector s = -2.0 * (u * v);
  return QuboProblem(std::move(q), std::move(s), v.squaredNorm());
}

SpinVector binary_map(const BinaryMapInput& input, const QuboSolver& solver, std::uint64_t seed) {
  const QuboProblem problem = build_qubo(input);
  try {
    return solver.solve(problem, seed).best;
  } catch (const std::exception& e) {
    throw SolverError("binary map (" + solver.name() + ", n=" + std::to_string(input.spins()) +
                      ", m=" + std::to_string(input.terms()) + "): " + e.what());
  }
}

Vector relaxed_map(const BinaryMapInput& input) {
  const Matrix& u = input.columns();
  for (Eigen::Index i = 0; i < u.cols(); ++i) {
    if (u.col(i).norm() == 0.0) {
      throw SingularInputError("relaxed map: column " + std::to_string(i) + " is zero");
    }
  }
  // Rows of U^T are the equations b^T u_i = v_i.
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(u.transpose());
  return cod.solve(input.targets());
}

}  // namespace qpsbgd
