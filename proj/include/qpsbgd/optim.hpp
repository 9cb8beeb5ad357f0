#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qpsbgd/net.hpp"
#include "qpsbgd/qubo.hpp"

namespace qpsbgd {

/// A batch view: MLP rows index into x, GCN rows are graph nodes.
struct Batch {
  const Matrix& x;
  std::span<const Index> rows;
  std::span<const int> labels;
};

/// One QUBO solved for one output column of one layer.
struct ColumnReport {
  long t = 0;
  std::size_t layer = 0;
  Index column = 0;
  Index qubo_n = 0;
  Index qubo_m = 0;
  double best_energy = 0.0;
};

nlohmann::json to_json(const ColumnReport& report);

struct StepReport {
  long t = 0;
  double loss = 0.0;                     // batch loss before the update
  std::vector<ColumnReport> columns;     // QP-SBGD only
  std::vector<Matrix> binary_gradients;  // QP-SBGD only: W-dot per layer
};

/// Where the intermediate gradient Rdot^l = dE/dR^l is taken.
enum class GradientPoint {
  /// Every layer binarized: the gradient at s = sign(Omega), as in the
  /// P-SBGD update rule and its fixed-point theorem.
  Binarized,
  /// R^l = X^l Omega^l with every other layer binarized and layer l itself
  /// latent. One forward/backward per layer.
  LatentLayer,
};

std::string to_string(GradientPoint point);
GradientPoint gradient_point_from_string(const std::string& name);

/// Rdot^l and X^l for every layer at the given point; `loss` is the batch
/// loss of the binarized network.
GradientBundle intermediate_gradients(const BinaryNetwork& net, const Batch& batch, GradientPoint point);

/// One QP-SBGD iteration: binary forward, intermediate gradients, then
/// per layer and output column the binary map over the batch with
/// u_b = x_b / |x_b|^2 and v_b = Rdot[b][i] of the summed batch loss
/// (the gradient of sample b's own loss); finally
/// Omega[:, i] -= alpha * W-dot[:, i]. All columns are solved before any
/// weight changes; a solver failure leaves `net` untouched and is rethrown
/// as SolverError naming (t, layer, column).
StepReport qpsbgd_step(BinaryNetwork& net, const Batch& batch, const QuboSolver& solver, double alpha, long t,
                       std::uint64_t seed = 0, GradientPoint point = GradientPoint::Binarized);

/// BinaryConnect with plain SGD: Omega <- clip(Omega - alpha * grad, -1, 1).
StepReport bc_sgd_step(BinaryNetwork& net, const Batch& batch, double alpha);

/// BinaryConnect with signSGD: Omega <- clip(Omega - alpha * sign(grad), -1, 1).
StepReport bc_signsgd_step(BinaryNetwork& net, const Batch& batch, double alpha);

/// ProxQuant: SGD step through the full-precision network followed by the
/// proximal map of sum_j min(|w_j - 1|, |w_j + 1|) with strength
/// lambda * alpha.
StepReport proxquant_step(BinaryNetwork& net, const Batch& batch, double alpha, double lambda);

/// Proximal map of the W-shaped binary regularizer: moves w toward its
/// nearest point of {-1, +1} by at most `threshold`.
double binary_prox(double w, double threshold);

/// Gradients dE/dW^l at W = sign(Omega) on the given batch.
std::vector<Matrix> weight_gradients(const BinaryNetwork& net, const Batch& batch);

/// The binary map of every layer column at s = sign(Omega) with gradients
/// evaluated at s on `full_batch`; entry [l][i] is true when -Pi(grad) == s
/// for that column.
std::vector<std::vector<bool>> is_fixed_point(const BinaryNetwork& net, const Batch& full_batch,
                                              const QuboSolver& solver);

}  // namespace qpsbgd
