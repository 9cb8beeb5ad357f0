#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qpsbgd/linalg.hpp"

namespace qpsbgd {

/// -1 for x <= -1, x inside (-1, 1), +1 for x >= 1.
double hard_tanh(double x);

/// -1 for x < 0, +1 for x >= 0. The single sign used everywhere.
int sign(double x);

Matrix sign(const Matrix& m);

enum class Head { SigmoidBce, LogSoftmaxNll };
enum class Flavor { Mlp, Gcn };
/// Binary evaluates sign(Omega) at every layer; Latent uses Omega as is.
enum class WeightMode { Binary, Latent };

std::string to_string(Head head);
std::string to_string(Flavor flavor);
Head head_from_string(const std::string& name);
Flavor flavor_from_string(const std::string& name);

struct BinaryLinearLayer {
  Matrix omega;  // inputs x outputs, no bias

  Index inputs() const { return omega.rows(); }
  Index outputs() const { return omega.cols(); }
  Matrix binarized() const { return sign(omega); }
};

/// Symmetric normalization D^{-1/2} (A + I) D^{-1/2}.
Matrix normalize_adjacency(const Matrix& adjacency);

class BinaryNetwork {
 public:
  /// MLP flavor.
  BinaryNetwork(std::vector<Matrix> omegas, Head head);
  /// GCN flavor over a normalized adjacency (see normalize_adjacency).
  BinaryNetwork(std::vector<Matrix> omegas, Head head, Matrix normalized_adjacency);

  /// Latent weights drawn uniformly from [-1, 1].
  static BinaryNetwork random(const std::vector<Index>& dims, Head head, std::mt19937_64& rng,
                              std::optional<Matrix> normalized_adjacency = std::nullopt);

  std::size_t depth() const { return layers_.size(); }
  BinaryLinearLayer& layer(std::size_t l) { return layers_.at(l); }
  const BinaryLinearLayer& layer(std::size_t l) const { return layers_.at(l); }
  const std::vector<BinaryLinearLayer>& layers() const { return layers_; }
  Head head() const { return head_; }
  Flavor flavor() const { return flavor_; }
  const Matrix& adjacency() const { return adjacency_; }
  Index input_dim() const { return layers_.front().inputs(); }
  Index output_dim() const { return layers_.back().outputs(); }

  nlohmann::json to_json() const;
  /// GCN checkpoints need the adjacency supplied again.
  static BinaryNetwork from_json(const nlohmann::json& j, std::optional<Matrix> normalized_adjacency = std::nullopt);

 private:
  void check_shapes() const;

  std::vector<BinaryLinearLayer> layers_;
  Head head_;
  Flavor flavor_;
  Matrix adjacency_;
};

/// Activations recorded by forward() for the backward pass. Row r of
/// inputs[l] / pre_activations[l] belongs to row r of the propagated
/// signal (batch sample for MLP, graph node for GCN).
struct ForwardCache {
  std::vector<Matrix> inputs;           // X^l fed into layer l (GCN: A_hat H^{l-1})
  std::vector<Matrix> pre_activations;  // R^l = X^l W^l
  std::vector<Matrix> weights;          // W^l actually used
  std::vector<Index> output_rows;       // rows of R^L that carry the loss
  WeightMode mode = WeightMode::Binary;

  bool empty() const { return inputs.empty(); }
};

struct ForwardPass {
  Matrix logits;  // |B| x output_dim
  ForwardCache cache;
};

/// MLP: `x` holds the batch (rows selects a subset when non-empty).
/// GCN: `x` holds all node features and `rows` the batch nodes.
/// In Binary mode `latent_layer`, if given, still uses its Omega: the
/// intermediate signal R^l = h(... h(X W^1) ... W^{l-1}) Omega^l.
ForwardPass forward(const BinaryNetwork& net, const Matrix& x, std::span<const Index> rows = {},
                    WeightMode mode = WeightMode::Binary, std::optional<std::size_t> latent_layer = std::nullopt);

struct LayerGradient {
  Matrix rdot;             // dE/dR^l on the active rows
  Matrix input;            // X^l on the same rows
  std::vector<Index> rows; // active row ids within the propagated signal

  /// dE/dW^l = X^T Rdot.
  Matrix weight_gradient() const { return input.transpose() * rdot; }
};

struct GradientBundle {
  std::vector<LayerGradient> layers;
  double loss = 0.0;  // mean over the batch
};

/// Labels: {0,1} for the sigmoid head, class ids for the softmax head.
double head_loss(Head head, const Matrix& logits, std::span<const int> labels, Matrix* dlogits = nullptr);

/// Reverse mode through the recorded forward with the straight-through
/// estimator: hardTanh passes gradient only where |R| < 1.
GradientBundle backward(const BinaryNetwork& net, const ForwardCache& cache, std::span<const int> labels);

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

std::vector<int> predict(Head head, const Matrix& logits);

/// Loss and accuracy with W = sign(Omega).
Evaluation evaluate(const BinaryNetwork& net, const Matrix& x, std::span<const Index> rows,
                    std::span<const int> labels);

}  // namespace qpsbgd
