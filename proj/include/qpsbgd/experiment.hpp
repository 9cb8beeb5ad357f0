#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qpsbgd/annealer.hpp"
#include "qpsbgd/datasets.hpp"
#include "qpsbgd/diagnostics.hpp"
#include "qpsbgd/net.hpp"
#include "qpsbgd/optim.hpp"
#include "qpsbgd/qubo.hpp"

namespace qpsbgd {

enum class DatasetKind { Blobs, Adult, Mnist, Karate };
enum class OptimizerKind { QpSbgd, BcSgd, BcSignSgd, ProxQuant };
enum class SolverKind { Exhaustive, Sa, Remote };

std::string to_string(DatasetKind kind);
std::string to_string(OptimizerKind kind);
std::string to_string(SolverKind kind);
OptimizerKind optimizer_from_string(const std::string& name);
SolverKind solver_from_string(const std::string& name);

struct DatasetConfig {
  DatasetKind kind = DatasetKind::Blobs;
  // adult
  std::string adult_train = "data/adult/a1a";
  std::string adult_test = "data/adult/a1a.t";
  std::optional<Index> feature_subset;
  // mnist
  std::pair<int, int> digit_pair{1, 7};
  std::string mnist_images = "data/mnist/images-idx3-ubyte";
  std::string mnist_labels = "data/mnist/labels-idx1-ubyte";
  std::size_t train_size = 500;
  std::size_t test_size = 3000;
  // blobs
  Index per_class = 50;
};

struct SolverConfig {
  SolverKind kind = SolverKind::Exhaustive;
  SaParams sa;
  std::size_t exhaustive_cap = kDefaultExhaustiveCap;
  SamplerEndpoint endpoint;
};

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::QpSbgd;
  std::optional<double> alpha;  // unset: the per-optimizer default
  double lambda0 = 1e-4;        // ProxQuant ramp lambda_t = lambda0 * t
  GradientPoint gradient_point = GradientPoint::Binarized;  // QP-SBGD only
  SolverConfig solver;
};

/// Learning rates used when a config leaves alpha unset.
double default_alpha(OptimizerKind kind, SolverKind solver);

struct ExperimentConfig {
  std::string name = "experiment";
  DatasetConfig dataset;
  std::vector<Index> dims;
  Flavor flavor = Flavor::Mlp;
  Head head = Head::SigmoidBce;
  OptimizerConfig optimizer;
  Index batch_size = 16;
  long epochs = 10;
  std::optional<long> steps_per_epoch;  // unset: ceil(|train| / batch_size)
  std::vector<std::uint64_t> seeds{0};
  std::string metrics_path;     // empty: not written
  std::string checkpoint_path;  // empty: not written
  std::string step_log_path;    // QP-SBGD column reports as JSON lines
  bool cdp = false;             // tally sign agreement of W-dot with the full-train gradient
  std::string cdp_path;

  double alpha() const { return optimizer.alpha.value_or(default_alpha(optimizer.kind, optimizer.solver.kind)); }
};

/// Reads a config; every violated field is listed in one ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

struct MetricsRecord {
  std::uint64_t seed = 0;
  long epoch = 0;
  std::string split;  // "train" or "test"
  double loss = 0.0;
  double accuracy = 0.0;
};

struct CdpRecord {
  std::uint64_t seed = 0;
  long epoch = 0;
  CdpTally tally;
};

struct RunResult {
  std::vector<MetricsRecord> metrics;
  std::vector<CdpRecord> cdp;  // one per (seed, epoch >= 1) when enabled
  std::vector<std::pair<std::uint64_t, BinaryNetwork>> networks;  // final weights per seed

  CdpTally pooled_cdp() const;
  /// Mean over seeds of the given split at `epoch`; NaN when absent.
  double mean_loss(const std::string& split, long epoch) const;
  double mean_accuracy(const std::string& split, long epoch) const;
};

/// A dataset instance in the shape the training loop needs.
struct PreparedData {
  Matrix x;                    // rows (MLP) or node features (GCN)
  std::vector<int> y;
  std::vector<Index> train;
  std::vector<Index> test;
  int num_classes = 2;
  std::optional<Matrix> adjacency;  // normalized, GCN only
};

PreparedData prepare_data(const DatasetConfig& cfg, std::uint64_t seed);

std::unique_ptr<QuboSolver> make_solver(const SolverConfig& cfg);

/// Trains every seed in turn. Metrics hold the epoch-0 evaluation of the
/// initialization plus one row per epoch and split, all with W = sign(Omega).
/// Output files named in the config are written at the end.
RunResult run_experiment(const ExperimentConfig& cfg);

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRecord>& metrics);
void write_cdp_csv(std::ostream& out, const std::vector<CdpRecord>& records);

}  // namespace qpsbgd
