#include "qpsbgd/net.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "qpsbgd/errors.hpp"

namespace qpsbgd {

double hard_tanh(double x) {
  if (x <= -1.0) return -1.0;
  if (x >= 1.0) return 1.0;
  return x;
}

int sign(double x) { return x < 0.0 ? -1 : 1; }

Matrix sign(const Matrix& m) {
  return m.unaryExpr([](double x) { return x < 0.0 ? -1.0 : 1.0; });
}

std::string to_string(Head head) { return head == Head::SigmoidBce ? "bce" : "nll"; }
std::string to_string(Flavor flavor) { return flavor == Flavor::Mlp ? "mlp" : "gcn"; }

Head head_from_string(const std::string& name) {
  if (name == "bce") return Head::SigmoidBce;
  if (name == "nll") return Head::LogSoftmaxNll;
  throw std::invalid_argument("unknown head '" + name + "' (expected bce or nll)");
}

Flavor flavor_from_string(const std::string& name) {
  if (name == "mlp") return Flavor::Mlp;
  if (name == "gcn") return Flavor::Gcn;
  throw std::invalid_argument("unknown flavor '" + name + "' (expected mlp or gcn)");
}

Matrix normalize_adjacency(const Matrix& adjacency) {
  if (adjacency.rows() != adjacency.cols()) {
    throw std::invalid_argument("adjacency must be square");
  }
  if (!adjacency.isApprox(adjacency.transpose(), 0.0)) {
    throw std::invalid_argument("adjacency must be symmetric");
  }
  const Matrix with_loops = adjacency + Matrix::Identity(adjacency.rows(), adjacency.cols());
  const Vector inv_sqrt_deg = with_loops.rowwise().sum().cwiseSqrt().cwiseInverse();
  return inv_sqrt_deg.asDiagonal() * with_loops * inv_sqrt_deg.asDiagonal();
}

BinaryNetwork::BinaryNetwork(std::vector<Matrix> omegas, Head head) : head_(head), flavor_(Flavor::Mlp) {
  for (auto& w : omegas) layers_.push_back({std::move(w)});
  check_shapes();
}

BinaryNetwork::BinaryNetwork(std::vector<Matrix> omegas, Head head, Matrix normalized_adjacency)
    : head_(head), flavor_(Flavor::Gcn), adjacency_(std::move(normalized_adjacency)) {
  for (auto& w : omegas) layers_.push_back({std::move(w)});
  check_shapes();
  if (adjacency_.rows() != adjacency_.cols() || adjacency_.rows() < 1) {
    throw std::invalid_argument("GCN adjacency must be square and non-empty");
  }
}

void BinaryNetwork::check_shapes() const {
  if (layers_.empty()) throw std::invalid_argument("network needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].inputs() < 1 || layers_[l].outputs() < 1) {
      throw std::invalid_argument("layer " + std::to_string(l) + " has an empty dimension");
    }
    if (l > 0 && layers_[l - 1].outputs() != layers_[l].inputs()) {
      throw std::invalid_argument("layer " + std::to_string(l) + " input dimension does not chain");
    }
  }
  if (head_ == Head::SigmoidBce && layers_.back().outputs() != 1) {
    throw std::invalid_argument("sigmoid/BCE head needs a single output");
  }
  if (head_ == Head::LogSoftmaxNll && layers_.back().outputs() < 2) {
    throw std::invalid_argument("log-softmax/NLL head needs at least two outputs");
  }
}

BinaryNetwork BinaryNetwork::random(const std::vector<Index>& dims, Head head, std::mt19937_64& rng,
                                    std::optional<Matrix> normalized_adjacency) {
  if (dims.size() < 2) throw std::invalid_argument("need at least input and output dimension");
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<Matrix> omegas;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Matrix w(dims[l], dims[l + 1]);
    // Column-major fill order is part of the reproducibility contract.
    for (Index c = 0; c < w.cols(); ++c)
      for (Index r = 0; r < w.rows(); ++r) w(r, c) = unit(rng);
    omegas.push_back(std::move(w));
  }
  if (normalized_adjacency) return BinaryNetwork(std::move(omegas), head, std::move(*normalized_adjacency));
  return BinaryNetwork(std::move(omegas), head);
}

nlohmann::json BinaryNetwork::to_json() const {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : layers_) {
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(layer.omega.size()));
    for (Index r = 0; r < layer.omega.rows(); ++r)
      for (Index c = 0; c < layer.omega.cols(); ++c) flat.push_back(layer.omega(r, c));
    layers.push_back({{"rows", layer.inputs()}, {"cols", layer.outputs()}, {"omega", flat}});
  }
  return {{"layers", layers}, {"flavor", to_string(flavor_)}, {"head", to_string(head_)}};
}

BinaryNetwork BinaryNetwork::from_json(const nlohmann::json& j, std::optional<Matrix> normalized_adjacency) {
  std::vector<Matrix> omegas;
  for (const auto& layer : j.at("layers")) {
    const Index rows = layer.at("rows").get<Index>();
    const Index cols = layer.at("cols").get<Index>();
    const auto flat = layer.at("omega").get<std::vector<double>>();
    if (static_cast<Index>(flat.size()) != rows * cols) {
      throw FormatError("checkpoint layer has " + std::to_string(flat.size()) + " weights, expected " +
                        std::to_string(rows * cols));
    }
    Matrix w(rows, cols);
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c) w(r, c) = flat[static_cast<std::size_t>(r * cols + c)];
    omegas.push_back(std::move(w));
  }
  const Head head = head_from_string(j.at("head").get<std::string>());
  const Flavor flavor = flavor_from_string(j.at("flavor").get<std::string>());
  if (flavor == Flavor::Gcn) {
    if (!normalized_adjacency) throw std::invalid_argument("GCN checkpoint needs an adjacency");
    return BinaryNetwork(std::move(omegas), head, std::move(*normalized_adjacency));
  }
  return BinaryNetwork(std::move(omegas), head);
}

ForwardPass forward(const BinaryNetwork& net, const Matrix& x, std::span<const Index> rows, WeightMode mode,
                    std::optional<std::size_t> latent_layer) {
  if (x.cols() != net.input_dim()) {
    throw std::invalid_argument("feature dimension " + std::to_string(x.cols()) + " does not match network input " +
                                std::to_string(net.input_dim()));
  }
  ForwardPass pass;
  ForwardCache& cache = pass.cache;
  cache.mode = mode;

  Matrix signal;
  if (net.flavor() == Flavor::Gcn) {
    if (x.rows() != net.adjacency().rows()) {
      throw std::invalid_argument("GCN features must have one row per graph node");
    }
    if (rows.empty()) throw std::invalid_argument("GCN forward needs batch node ids");
    signal = x;
    cache.output_rows.assign(rows.begin(), rows.end());
  } else if (rows.empty()) {
    signal = x;
    cache.output_rows.resize(static_cast<std::size_t>(x.rows()));
    for (Index r = 0; r < x.rows(); ++r) cache.output_rows[static_cast<std::size_t>(r)] = r;
  } else {
    signal.resize(static_cast<Index>(rows.size()), x.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) signal.row(static_cast<Index>(k)) = x.row(rows[k]);
    cache.output_rows.resize(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) cache.output_rows[k] = static_cast<Index>(k);
  }
  for (Index r : cache.output_rows) {
    if (r < 0 || r >= signal.rows()) throw std::invalid_argument("batch row out of range");
  }

  for (std::size_t l = 0; l < net.depth(); ++l) {
    const auto& layer = net.layer(l);
    Matrix w = mode == WeightMode::Binary && latent_layer != l ? layer.binarized() : layer.omega;
    Matrix input = net.flavor() == Flavor::Gcn ? Matrix(net.adjacency() * signal) : signal;
    Matrix pre = input * w;
    if (l + 1 < net.depth()) {
      signal = pre.unaryExpr([](double v) { return hard_tanh(v); });
    }
    cache.inputs.push_back(std::move(input));
    cache.pre_activations.push_back(std::move(pre));
    cache.weights.push_back(std::move(w));
  }

  const Matrix& last = cache.pre_activations.back();
  pass.logits.resize(static_cast<Index>(cache.output_rows.size()), last.cols());
  for (std::size_t k = 0; k < cache.output_rows.size(); ++k) {
    pass.logits.row(static_cast<Index>(k)) = last.row(cache.output_rows[k]);
  }
  return pass;
}

namespace {

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

double head_loss(Head head, const Matrix& logits, std::span<const int> labels, Matrix* dlogits) {
  const Index batch = logits.rows();
  if (static_cast<Index>(labels.size()) != batch) {
    throw std::invalid_argument("label count does not match batch size");
  }
  if (batch == 0) throw std::invalid_argument("empty batch");
  const double scale = 1.0 / static_cast<double>(batch);
  if (dlogits) dlogits->setZero(logits.rows(), logits.cols());
  double loss = 0.0;
  for (Index b = 0; b < batch; ++b) {
    const int y = labels[static_cast<std::size_t>(b)];
    if (head == Head::SigmoidBce) {
      if (y != 0 && y != 1) throw std::invalid_argument("BCE labels must be 0 or 1");
      const double r = logits(b, 0);
      loss += softplus(r) - y * r;
      if (dlogits) (*dlogits)(b, 0) = (sigmoid(r) - y) * scale;
    } else {
      if (y < 0 || y >= logits.cols()) throw std::invalid_argument("NLL label out of range");
      const double mx = logits.row(b).maxCoeff();
      const double lse = mx + std::log((logits.row(b).array() - mx).exp().sum());
      loss += lse - logits(b, y);
      if (dlogits) {
        for (Index c = 0; c < logits.cols(); ++c) {
          (*dlogits)(b, c) = (std::exp(logits(b, c) - lse) - (c == y ? 1.0 : 0.0)) * scale;
        }
      }
    }
  }
  return loss * scale;
}

GradientBundle backward(const BinaryNetwork& net, const ForwardCache& cache, std::span<const int> labels) {
  if (cache.empty()) throw StateError("backward called without a forward cache");
  if (cache.inputs.size() != net.depth()) throw StateError("forward cache does not match network depth");

  const std::size_t depth = net.depth();
  const Matrix& last = cache.pre_activations.back();

  Matrix logits(static_cast<Index>(cache.output_rows.size()), last.cols());
  for (std::size_t k = 0; k < cache.output_rows.size(); ++k) {
    logits.row(static_cast<Index>(k)) = last.row(cache.output_rows[k]);
  }
  Matrix dlogits;
  GradientBundle bundle;
  bundle.loss = head_loss(net.head(), logits, labels, &dlogits);
  bundle.layers.resize(depth);

  // dE/dR^L over every propagated row; rows outside the batch stay zero.
  Matrix drdot = Matrix::Zero(last.rows(), last.cols());
  for (std::size_t k = 0; k < cache.output_rows.size(); ++k) {
    drdot.row(cache.output_rows[k]) += dlogits.row(static_cast<Index>(k));
  }
  std::set<Index> active(cache.output_rows.begin(), cache.output_rows.end());

  for (std::size_t l = depth; l-- > 0;) {
    LayerGradient& g = bundle.layers[l];
    g.rows.assign(active.begin(), active.end());
    g.rdot.resize(static_cast<Index>(g.rows.size()), drdot.cols());
    g.input.resize(static_cast<Index>(g.rows.size()), cache.inputs[l].cols());
    for (std::size_t k = 0; k < g.rows.size(); ++k) {
      g.rdot.row(static_cast<Index>(k)) = drdot.row(g.rows[k]);
      g.input.row(static_cast<Index>(k)) = cache.inputs[l].row(g.rows[k]);
    }
    if (l == 0) break;

    Matrix dinput = drdot * cache.weights[l].transpose();
    Matrix dh;
    if (net.flavor() == Flavor::Gcn) {
      dh = net.adjacency().transpose() * dinput;
      std::set<Index> upstream;
      const Matrix& a = net.adjacency();
      for (Index i : active) {
        for (Index j = 0; j < a.cols(); ++j) {
          if (a(i, j) != 0.0) upstream.insert(j);
        }
      }
      active = std::move(upstream);
    } else {
      dh = std::move(dinput);
    }
    const Matrix& pre = cache.pre_activations[l - 1];
    drdot = dh.cwiseProduct(pre.unaryExpr([](double v) { return std::abs(v) < 1.0 ? 1.0 : 0.0; }));
  }
  return bundle;
}

std::vector<int> predict(Head head, const Matrix& logits) {
  std::vector<int> out(static_cast<std::size_t>(logits.rows()));
  for (Index b = 0; b < logits.rows(); ++b) {
    if (head == Head::SigmoidBce) {
      out[static_cast<std::size_t>(b)] = logits(b, 0) >= 0.0 ? 1 : 0;
    } else {
      Index arg = 0;
      logits.row(b).maxCoeff(&arg);
      out[static_cast<std::size_t>(b)] = static_cast<int>(arg);
    }
  }
  return out;
}

Evaluation evaluate(const BinaryNetwork& net, const Matrix& x, std::span<const Index> rows, std::span<const int> labels) {
  const ForwardPass pass = forward(net, x, rows, WeightMode::Binary);
  Evaluation ev;
  ev.loss = head_loss(net.head(), pass.logits, labels);
  const auto pred = predict(net.head(), pass.logits);
  std::size_t correct = 0;
  for (std::size_t k = 0; k < pred.size(); ++k) correct += pred[k] == labels[k] ? 1 : 0;
  ev.accuracy = pred.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(pred.size());
  return ev;
}

}  // namespace qpsbgd
