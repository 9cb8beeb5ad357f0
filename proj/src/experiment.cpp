#include "qpsbgd/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include "qpsbgd/errors.hpp"
#include "qpsbgd/optim.hpp"

namespace qpsbgd {

std::string to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::Blobs: return "blobs";
    case DatasetKind::Adult: return "adult";
    case DatasetKind::Mnist: return "mnist";
    case DatasetKind::Karate: return "karate";
  }
  return "?";
}

std::string to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::QpSbgd: return "qpsbgd";
    case OptimizerKind::BcSgd: return "bc_sgd";
    case OptimizerKind::BcSignSgd: return "bc_signsgd";
    case OptimizerKind::ProxQuant: return "proxquant";
  }
  return "?";
}

std::string to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::Exhaustive: return "exhaustive";
    case SolverKind::Sa: return "sa";
    case SolverKind::Remote: return "remote";
  }
  return "?";
}

OptimizerKind optimizer_from_string(const std::string& name) {
  for (auto k : {OptimizerKind::QpSbgd, OptimizerKind::BcSgd, OptimizerKind::BcSignSgd, OptimizerKind::ProxQuant}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown optimizer '" + name + "' (expected qpsbgd, bc_sgd, bc_signsgd or proxquant)");
}

SolverKind solver_from_string(const std::string& name) {
  for (auto k : {SolverKind::Exhaustive, SolverKind::Sa, SolverKind::Remote}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown solver '" + name + "' (expected exhaustive, sa or remote)");
}

double default_alpha(OptimizerKind kind, SolverKind solver) {
  switch (kind) {
    case OptimizerKind::QpSbgd: return solver == SolverKind::Remote ? 0.01 : 0.05;
    case OptimizerKind::BcSgd: return 5e-5;
    case OptimizerKind::BcSignSgd: return 0.05;
    // No value is published for ProxQuant; it shares the BC-signSGD rate.
    case OptimizerKind::ProxQuant: return 0.05;
  }
  return 0.05;
}

namespace {

DatasetKind dataset_from_string(const std::string& name) {
  for (auto k : {DatasetKind::Blobs, DatasetKind::Adult, DatasetKind::Mnist, DatasetKind::Karate}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown dataset '" + name + "' (expected blobs, adult, mnist or karate)");
}

// Collects every problem in a config before reporting.
class Checker {
 public:
  explicit Checker(const nlohmann::json& root) : root_(root) {}

  void fail(const std::string& field, const std::string& message) { errors_.push_back(field + ": " + message); }

  // Reads `key` of object `obj` (path `where`) into `out` if present.
  template <typename T>
  bool read(const nlohmann::json& obj, const std::string& where, const std::string& key, T& out) {
    seen(where, key);
    if (!obj.is_object() || !obj.contains(key)) return false;
    try {
      out = obj.at(key).get<T>();
      return true;
    } catch (const nlohmann::json::exception&) {
      fail(join(where, key), "has the wrong type");
      return false;
    }
  }

  template <typename T>
  void require(const nlohmann::json& obj, const std::string& where, const std::string& key, T& out) {
    if (!read(obj, where, key, out) && !(obj.is_object() && obj.contains(key))) fail(join(where, key), "is required");
  }

  template <typename T, typename Convert>
  void parse(const nlohmann::json& obj, const std::string& where, const std::string& key, T& out, Convert convert) {
    std::string text;
    if (!read(obj, where, key, text)) return;
    try {
      out = convert(text);
    } catch (const std::invalid_argument& e) {
      fail(join(where, key), e.what());
    }
  }

  const nlohmann::json& object(const nlohmann::json& obj, const std::string& where, const std::string& key) {
    static const nlohmann::json empty = nlohmann::json::object();
    seen(where, key);
    if (!obj.is_object() || !obj.contains(key)) return empty;
    if (!obj.at(key).is_object()) {
      fail(join(where, key), "must be an object");
      return empty;
    }
    return obj.at(key);
  }

  void reject_unknown(const nlohmann::json& obj, const std::string& where) {
    if (!obj.is_object()) return;
    for (const auto& [key, value] : obj.items()) {
      if (!known_.count(join(where, key))) fail(join(where, key), "unknown field");
    }
  }

  void finish() const {
    if (errors_.empty()) return;
    std::string message = "invalid config:";
    for (const auto& e : errors_) message += "\n  " + e;
    throw ConfigError(message);
  }

  static std::string join(const std::string& where, const std::string& key) {
    return where.empty() ? key : where + "." + key;
  }

 private:
  void seen(const std::string& where, const std::string& key) { known_.insert(join(where, key)); }

  const nlohmann::json& root_;
  std::vector<std::string> errors_;
  std::set<std::string> known_;
};

Index input_dim(const DatasetConfig& d) {
  switch (d.kind) {
    case DatasetKind::Blobs: return 3;
    case DatasetKind::Adult: return d.feature_subset.value_or(kAdultFeatures);
    case DatasetKind::Mnist: return kMnistLines;
    case DatasetKind::Karate: return 6;
  }
  return 0;
}

int class_count(const DatasetConfig& d) { return d.kind == DatasetKind::Karate ? 4 : 2; }

}  // namespace

ExperimentConfig parse_config(const nlohmann::json& j) {
  Checker c(j);
  ExperimentConfig cfg;
  if (!j.is_object()) c.fail("config", "must be a JSON object");

  c.read(j, "", "name", cfg.name);

  const auto& ds = c.object(j, "", "dataset");
  c.parse(ds, "dataset", "kind", cfg.dataset.kind, dataset_from_string);
  if (!ds.contains("kind")) c.fail("dataset.kind", "is required");
  c.read(ds, "dataset", "train", cfg.dataset.adult_train);
  c.read(ds, "dataset", "test", cfg.dataset.adult_test);
  Index subset = 0;
  if (c.read(ds, "dataset", "feature_subset", subset)) {
    if (subset < 1 || subset > kAdultFeatures) c.fail("dataset.feature_subset", "must be in [1, 123]");
    cfg.dataset.feature_subset = subset;
  }
  std::vector<int> pair;
  if (c.read(ds, "dataset", "digit_pair", pair)) {
    if (pair.size() != 2 || pair[0] == pair[1] || std::any_of(pair.begin(), pair.end(), [](int d) { return d < 0 || d > 9; })) {
      c.fail("dataset.digit_pair", "must be two different digits");
    } else {
      cfg.dataset.digit_pair = {pair[0], pair[1]};
    }
  }
  c.read(ds, "dataset", "images", cfg.dataset.mnist_images);
  c.read(ds, "dataset", "labels", cfg.dataset.mnist_labels);
  if (c.read(ds, "dataset", "train_size", cfg.dataset.train_size) && cfg.dataset.train_size < 1) {
    c.fail("dataset.train_size", "must be >= 1");
  }
  c.read(ds, "dataset", "test_size", cfg.dataset.test_size);
  if (c.read(ds, "dataset", "per_class", cfg.dataset.per_class) && cfg.dataset.per_class < 1) {
    c.fail("dataset.per_class", "must be >= 1");
  }
  c.reject_unknown(ds, "dataset");

  const auto& arch = c.object(j, "", "architecture");
  c.require(arch, "architecture", "dims", cfg.dims);
  c.parse(arch, "architecture", "flavor", cfg.flavor, flavor_from_string);
  c.parse(arch, "architecture", "head", cfg.head, head_from_string);
  c.reject_unknown(arch, "architecture");
  if (arch.contains("dims")) {
    if (cfg.dims.size() < 2) {
      c.fail("architecture.dims", "needs at least an input and an output dimension");
    } else {
      if (std::any_of(cfg.dims.begin(), cfg.dims.end(), [](Index d) { return d < 1; })) {
        c.fail("architecture.dims", "every dimension must be >= 1");
      }
      const Index in = input_dim(cfg.dataset);
      if (cfg.dims.front() != in) {
        c.fail("architecture.dims", "input dimension " + std::to_string(cfg.dims.front()) + " does not match the " +
                                        to_string(cfg.dataset.kind) + " features (" + std::to_string(in) + ")");
      }
      const Index out = cfg.head == Head::SigmoidBce ? 1 : class_count(cfg.dataset);
      if (cfg.dims.back() != out) {
        c.fail("architecture.dims", "output dimension must be " + std::to_string(out) + " for the " +
                                        to_string(cfg.head) + " head on " + to_string(cfg.dataset.kind));
      }
    }
  }
  if (cfg.head == Head::SigmoidBce && class_count(cfg.dataset) != 2) {
    c.fail("architecture.head", "bce needs a two-class dataset");
  }
  if ((cfg.flavor == Flavor::Gcn) != (cfg.dataset.kind == DatasetKind::Karate)) {
    c.fail("architecture.flavor", "gcn is used exactly for the karate graph");
  }

  const auto& opt = c.object(j, "", "optimizer");
  c.parse(opt, "optimizer", "kind", cfg.optimizer.kind, optimizer_from_string);
  double alpha = 0.0;
  if (c.read(opt, "optimizer", "alpha", alpha)) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) c.fail("optimizer.alpha", "must be > 0");
    cfg.optimizer.alpha = alpha;
  }
  if (c.read(opt, "optimizer", "lambda0", cfg.optimizer.lambda0) && !(cfg.optimizer.lambda0 >= 0.0)) {
    c.fail("optimizer.lambda0", "must be >= 0");
  }
  c.parse(opt, "optimizer", "gradient_point", cfg.optimizer.gradient_point, gradient_point_from_string);
  const auto& sol = c.object(opt, "optimizer", "solver");
  auto& sc = cfg.optimizer.solver;
  c.parse(sol, "optimizer.solver", "kind", sc.kind, solver_from_string);
  c.read(sol, "optimizer.solver", "sweeps", sc.sa.sweeps);
  c.read(sol, "optimizer.solver", "restarts", sc.sa.restarts);
  double t_hot = 0.0;
  if (c.read(sol, "optimizer.solver", "t_hot", t_hot)) sc.sa.t_hot = t_hot;
  c.read(sol, "optimizer.solver", "t_cold", sc.sa.t_cold);
  c.read(sol, "optimizer.solver", "cap", sc.exhaustive_cap);
  c.read(sol, "optimizer.solver", "url", sc.endpoint.base_url);
  c.read(sol, "optimizer.solver", "num_reads", sc.endpoint.num_reads);
  long timeout_ms = 0;
  if (c.read(sol, "optimizer.solver", "timeout_ms", timeout_ms)) sc.endpoint.timeout = std::chrono::milliseconds(timeout_ms);
  c.read(sol, "optimizer.solver", "max_retries", sc.endpoint.max_retries);
  std::string token_env;
  if (c.read(sol, "optimizer.solver", "token_env", token_env)) {
    if (const char* token = std::getenv(token_env.c_str())) sc.endpoint.auth_token = token;
  }
  c.reject_unknown(sol, "optimizer.solver");
  c.reject_unknown(opt, "optimizer");
  if (sc.kind == SolverKind::Sa) {
    try {
      sc.sa.validate();
    } catch (const std::invalid_argument& e) {
      c.fail("optimizer.solver", e.what());
    }
  }
  if (sc.kind == SolverKind::Remote) {
    try {
      sc.endpoint.validate();
    } catch (const ConfigError& e) {
      c.fail("optimizer.solver", e.what());
    }
  }

  if (c.read(j, "", "batch_size", cfg.batch_size) && cfg.batch_size < 1) c.fail("batch_size", "must be >= 1");
  if (c.read(j, "", "epochs", cfg.epochs) && cfg.epochs < 0) c.fail("epochs", "must be >= 0");
  long steps = 0;
  if (c.read(j, "", "steps_per_epoch", steps)) {
    if (steps < 1) c.fail("steps_per_epoch", "must be >= 1");
    cfg.steps_per_epoch = steps;
  }
  if (c.read(j, "", "seeds", cfg.seeds) && cfg.seeds.empty()) c.fail("seeds", "must not be empty");

  const auto& out = c.object(j, "", "output");
  c.read(out, "output", "metrics", cfg.metrics_path);
  c.read(out, "output", "checkpoint", cfg.checkpoint_path);
  c.read(out, "output", "step_log", cfg.step_log_path);
  c.read(out, "output", "cdp", cfg.cdp_path);
  c.reject_unknown(out, "output");
  c.read(j, "", "cdp", cfg.cdp);
  if (!cfg.cdp_path.empty()) cfg.cdp = true;
  if (cfg.cdp && cfg.optimizer.kind != OptimizerKind::QpSbgd) c.fail("cdp", "is only measured for qpsbgd");

  c.reject_unknown(j, "");
  c.finish();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_config(j);
}

PreparedData prepare_data(const DatasetConfig& cfg, std::uint64_t seed) {
  auto from_tabular = [](TabularDataset&& d) {
    return PreparedData{std::move(d.x), std::move(d.y), std::move(d.train), std::move(d.test), d.num_classes, {}};
  };
  switch (cfg.kind) {
    case DatasetKind::Blobs:
      return from_tabular(make_blobs(seed, cfg.per_class));
    case DatasetKind::Adult:
      return from_tabular(load_adult(cfg.adult_train, cfg.adult_test, cfg.feature_subset, seed));
    case DatasetKind::Mnist: {
      const auto images = read_idx_images(cfg.mnist_images);
      const auto labels = read_idx_labels(cfg.mnist_labels);
      return from_tabular(mnist_line_features(images, labels, cfg.digit_pair, seed, cfg.train_size, cfg.test_size));
    }
    case DatasetKind::Karate: {
      auto g = karate_club(seed);
      return PreparedData{std::move(g.x), std::move(g.y), std::move(g.train), std::move(g.test), g.num_classes,
                          normalize_adjacency(g.adjacency)};
    }
  }
  throw std::invalid_argument("unknown dataset");
}

std::unique_ptr<QuboSolver> make_solver(const SolverConfig& cfg) {
  switch (cfg.kind) {
    case SolverKind::Exhaustive: return std::make_unique<ExhaustiveSolver>(cfg.exhaustive_cap);
    case SolverKind::Sa: return std::make_unique<SaSolver>(cfg.sa);
    case SolverKind::Remote: return std::make_unique<RemoteSolver>(cfg.endpoint);
  }
  throw std::invalid_argument("unknown solver");
}

CdpTally RunResult::pooled_cdp() const {
  CdpTally total;
  for (const auto& r : cdp) total += r.tally;
  return total;
}

namespace {

template <typename Field>
double mean_of(const std::vector<MetricsRecord>& metrics, const std::string& split, long epoch, Field field) {
  double sum = 0.0;
  int count = 0;
  for (const auto& m : metrics) {
    if (m.split == split && m.epoch == epoch) {
      sum += field(m);
      ++count;
    }
  }
  return count ? sum / count : std::numeric_limits<double>::quiet_NaN();
}

std::vector<int> labels_of(const std::vector<int>& y, std::span<const Index> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (Index r : rows) out.push_back(y[static_cast<std::size_t>(r)]);
  return out;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

}  // namespace

double RunResult::mean_loss(const std::string& split, long epoch) const {
  return mean_of(metrics, split, epoch, [](const MetricsRecord& m) { return m.loss; });
}

double RunResult::mean_accuracy(const std::string& split, long epoch) const {
  return mean_of(metrics, split, epoch, [](const MetricsRecord& m) { return m.accuracy; });
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  const auto solver = cfg.optimizer.kind == OptimizerKind::QpSbgd ? make_solver(cfg.optimizer.solver) : nullptr;
  const double alpha = cfg.alpha();
  std::ostringstream step_log;
  RunResult result;

  for (const std::uint64_t seed : cfg.seeds) {
    const PreparedData data = prepare_data(cfg.dataset, seed);
    if (data.x.cols() != cfg.dims.front()) {
      throw ConfigError("architecture.dims: input dimension does not match the dataset (" +
                        std::to_string(data.x.cols()) + ")");
    }
    std::mt19937_64 init_rng(mix_seed(seed, 0x1A17));
    BinaryNetwork net = BinaryNetwork::random(cfg.dims, cfg.head, init_rng, data.adjacency);

    const std::vector<int> train_labels = labels_of(data.y, data.train);
    const std::vector<int> test_labels = labels_of(data.y, data.test);
    const Batch full_train{data.x, data.train, train_labels};

    auto record = [&](long epoch) {
      const auto tr = evaluate(net, data.x, data.train, train_labels);
      result.metrics.push_back({seed, epoch, "train", tr.loss, tr.accuracy});
      if (!data.test.empty()) {
        const auto te = evaluate(net, data.x, data.test, test_labels);
        result.metrics.push_back({seed, epoch, "test", te.loss, te.accuracy});
      }
    };
    record(0);

    const Index batch_size = std::min<Index>(cfg.batch_size, static_cast<Index>(data.train.size()));
    const long steps = cfg.steps_per_epoch.value_or(
        static_cast<long>((static_cast<Index>(data.train.size()) + batch_size - 1) / batch_size));
    long t = 0;
    for (long epoch = 1; epoch <= cfg.epochs; ++epoch) {
      // Batches are consecutive slices of seeded permutations of the
      // training rows; a fresh permutation starts whenever one runs out.
      std::vector<Index> order;
      std::size_t cursor = 0;
      std::uint64_t pass = 0;
      CdpTally epoch_cdp;
      for (long step = 0; step < steps; ++step) {
        std::vector<Index> rows;
        while (static_cast<Index>(rows.size()) < batch_size) {
          if (cursor == order.size()) {
            order = data.train;
            seeded_shuffle(order, mix_seed(mix_seed(seed, static_cast<std::uint64_t>(epoch)), pass++));
            cursor = 0;
          }
          rows.push_back(order[cursor++]);
        }
        const std::vector<int> labels = labels_of(data.y, rows);
        const Batch batch{data.x, rows, labels};
        ++t;
        switch (cfg.optimizer.kind) {
          case OptimizerKind::QpSbgd: {
            const GradientPoint point = cfg.optimizer.gradient_point;
            GradientBundle full;
            if (cfg.cdp) full = intermediate_gradients(net, full_train, point);
            const auto report = qpsbgd_step(net, batch, *solver, alpha, t, seed, point);
            for (std::size_t l = 0; l < full.layers.size(); ++l) {
              epoch_cdp += cdp_count(report.binary_gradients[l], full.layers[l].weight_gradient());
            }
            if (!cfg.step_log_path.empty()) {
              for (const auto& column : report.columns) {
                auto line = to_json(column);
                line["seed"] = seed;
                step_log << line.dump() << '\n';
              }
            }
            break;
          }
          case OptimizerKind::BcSgd: bc_sgd_step(net, batch, alpha); break;
          case OptimizerKind::BcSignSgd: bc_signsgd_step(net, batch, alpha); break;
          case OptimizerKind::ProxQuant:
            proxquant_step(net, batch, alpha, cfg.optimizer.lambda0 * static_cast<double>(t));
            break;
        }
      }
      if (cfg.cdp) result.cdp.push_back({seed, epoch, epoch_cdp});
      record(epoch);
    }
    result.networks.emplace_back(seed, std::move(net));
  }

  if (!cfg.metrics_path.empty()) {
    auto out = open_output(cfg.metrics_path);
    write_metrics_csv(out, result.metrics);
  }
  if (!cfg.cdp_path.empty()) {
    auto out = open_output(cfg.cdp_path);
    write_cdp_csv(out, result.cdp);
  }
  if (!cfg.step_log_path.empty()) {
    auto out = open_output(cfg.step_log_path);
    out << step_log.str();
  }
  if (!cfg.checkpoint_path.empty()) {
    nlohmann::json nets = nlohmann::json::array();
    for (const auto& [seed, net] : result.networks) nets.push_back({{"seed", seed}, {"network", net.to_json()}});
    auto out = open_output(cfg.checkpoint_path);
    out << nlohmann::json{{"name", cfg.name}, {"networks", nets}}.dump(1) << '\n';
  }
  return result;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRecord>& metrics) {
  out << "seed,epoch,split,loss,accuracy\n";
  out << std::setprecision(10);
  for (const auto& m : metrics) {
    out << m.seed << ',' << m.epoch << ',' << m.split << ',' << m.loss << ',' << m.accuracy << '\n';
  }
}

void write_cdp_csv(std::ostream& out, const std::vector<CdpRecord>& records) {
  out << "seed,epoch,k,n,z\n";
  out << std::setprecision(6);
  for (const auto& r : records) {
    out << r.seed << ',' << r.epoch << ',' << r.tally.k << ',' << r.tally.n << ',';
    if (r.tally.n > 0) {
      out << r.tally.z();
    } else {
      out << "nan";
    }
    out << '\n';
  }
}

}  // namespace qpsbgd
