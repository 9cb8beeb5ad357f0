#include "qpsbgd/optim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qpsbgd/binmap.hpp"
#include "qpsbgd/errors.hpp"

namespace qpsbgd {

nlohmann::json to_json(const ColumnReport& report) {
  return {{"t", report.t},
          {"layer", report.layer},
          {"column", report.column},
          {"qubo_n", report.qubo_n},
          {"qubo_m", report.qubo_m},
          {"best_energy", report.best_energy}};
}

namespace {

GradientBundle gradients(const BinaryNetwork& net, const Batch& batch, WeightMode mode,
                         std::optional<std::size_t> latent_layer = std::nullopt) {
  if (batch.labels.empty()) throw std::invalid_argument("empty batch");
  const ForwardPass pass = forward(net, batch.x, batch.rows, mode, latent_layer);
  return backward(net, pass.cache, batch.labels);
}

// Binary map for one column: samples are the rows of the layer input.
QuboProblem column_qubo(const LayerGradient& g, Index column, double scale) {
  const Index n = g.input.cols();
  try {
    return build_qubo(BinaryMapInput::from_jacobian(g.input.transpose(), scale * g.rdot.col(column)));
  } catch (const SingularInputError&) {
    // Every sample has a zero input: no term constrains the column.
    return QuboProblem::zero(static_cast<std::size_t>(n));
  }
}

Index effective_terms(const LayerGradient& g) {
  Index m = 0;
  for (Index b = 0; b < g.input.rows(); ++b) m += g.input.row(b).norm() >= kMinJacobianNorm ? 1 : 0;
  return m;
}

}  // namespace

std::string to_string(GradientPoint point) {
  return point == GradientPoint::LatentLayer ? "latent_layer" : "binarized";
}

GradientPoint gradient_point_from_string(const std::string& name) {
  if (name == "latent_layer") return GradientPoint::LatentLayer;
  if (name == "binarized") return GradientPoint::Binarized;
  throw std::invalid_argument("unknown gradient point '" + name + "' (expected latent_layer or binarized)");
}

GradientBundle intermediate_gradients(const BinaryNetwork& net, const Batch& batch, GradientPoint point) {
  GradientBundle bundle = gradients(net, batch, WeightMode::Binary);
  if (point == GradientPoint::LatentLayer) {
    for (std::size_t l = 0; l < net.depth(); ++l) {
      bundle.layers[l] = std::move(gradients(net, batch, WeightMode::Binary, l).layers[l]);
    }
  }
  return bundle;
}

StepReport qpsbgd_step(BinaryNetwork& net, const Batch& batch, const QuboSolver& solver, double alpha, long t,
                       std::uint64_t seed, GradientPoint point) {
  if (!(alpha > 0.0)) throw std::invalid_argument("learning rate must be positive");
  const GradientBundle grads = intermediate_gradients(net, batch, point);

  // Each sample is its own objective: v_b is the gradient of that sample's
  // loss, i.e. Rdot of the summed (not averaged) batch loss.
  const double v_scale = static_cast<double>(batch.labels.size());
  StepReport report;
  report.t = t;
  report.loss = grads.loss;
  for (std::size_t l = 0; l < net.depth(); ++l) {
    const LayerGradient& g = grads.layers[l];
    const Index m = effective_terms(g);
    Matrix wdot(net.layer(l).inputs(), net.layer(l).outputs());
    for (Index i = 0; i < wdot.cols(); ++i) {
      const QuboProblem problem = column_qubo(g, i, v_scale);
      const std::uint64_t column_seed =
          mix_seed(mix_seed(mix_seed(seed, static_cast<std::uint64_t>(t)), l), static_cast<std::uint64_t>(i));
      SolveResult solved;
      try {
        solved = solver.solve(problem, column_seed);
      } catch (const std::exception& e) {
        throw SolverError("solver '" + solver.name() + "' failed at t=" + std::to_string(t) +
                          ", layer=" + std::to_string(l) + ", column=" + std::to_string(i) + ": " + e.what());
      }
      wdot.col(i) = solved.best.to_vector();
      report.columns.push_back({t, l, i, static_cast<Index>(problem.size()), m, solved.best_energy});
    }
    report.binary_gradients.push_back(std::move(wdot));
  }
  for (std::size_t l = 0; l < net.depth(); ++l) {
    net.layer(l).omega -= alpha * report.binary_gradients[l];
  }
  return report;
}

StepReport bc_sgd_step(BinaryNetwork& net, const Batch& batch, double alpha) {
  const GradientBundle grads = gradients(net, batch, WeightMode::Binary);
  for (std::size_t l = 0; l < net.depth(); ++l) {
    Matrix& omega = net.layer(l).omega;
    omega = (omega - alpha * grads.layers[l].weight_gradient()).cwiseMax(-1.0).cwiseMin(1.0);
  }
  return {.t = 0, .loss = grads.loss, .columns = {}, .binary_gradients = {}};
}

StepReport bc_signsgd_step(BinaryNetwork& net, const Batch& batch, double alpha) {
  const GradientBundle grads = gradients(net, batch, WeightMode::Binary);
  for (std::size_t l = 0; l < net.depth(); ++l) {
    Matrix& omega = net.layer(l).omega;
    omega = (omega - alpha * sign(grads.layers[l].weight_gradient())).cwiseMax(-1.0).cwiseMin(1.0);
  }
  return {.t = 0, .loss = grads.loss, .columns = {}, .binary_gradients = {}};
}

double binary_prox(double w, double threshold) {
  const double target = sign(w);
  const double distance = std::abs(w - target);
  const double step = std::min(threshold, distance);
  return w + (target > w ? step : -step);
}

StepReport proxquant_step(BinaryNetwork& net, const Batch& batch, double alpha, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("ProxQuant lambda must be >= 0");
  const GradientBundle grads = gradients(net, batch, WeightMode::Latent);
  const double threshold = lambda * alpha;
  for (std::size_t l = 0; l < net.depth(); ++l) {
    Matrix& omega = net.layer(l).omega;
    omega -= alpha * grads.layers[l].weight_gradient();
    if (threshold > 0.0) {
      omega = omega.unaryExpr([threshold](double w) { return binary_prox(w, threshold); });
    }
  }
  return {.t = 0, .loss = grads.loss, .columns = {}, .binary_gradients = {}};
}

std::vector<Matrix> weight_gradients(const BinaryNetwork& net, const Batch& batch) {
  const GradientBundle grads = gradients(net, batch, WeightMode::Binary);
  std::vector<Matrix> out;
  for (const auto& g : grads.layers) out.push_back(g.weight_gradient());
  return out;
}

std::vector<std::vector<bool>> is_fixed_point(const BinaryNetwork& net, const Batch& full_batch,
                                              const QuboSolver& solver) {
  const GradientBundle grads = gradients(net, full_batch, WeightMode::Binary);
  std::vector<std::vector<bool>> fixed(net.depth());
  const double scale = static_cast<double>(full_batch.labels.size());
  for (std::size_t l = 0; l < net.depth(); ++l) {
    const Matrix s = net.layer(l).binarized();
    for (Index i = 0; i < s.cols(); ++i) {
      const SolveResult solved = solver.solve(column_qubo(grads.layers[l], i, scale), 0);
      fixed[l].push_back(solved.best.negated().to_vector() == s.col(i));
    }
  }
  return fixed;
}

}  // namespace qpsbgd
