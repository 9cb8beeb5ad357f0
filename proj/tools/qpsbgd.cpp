// qpsbgd command line: training runs and the diagnostic subcommands.

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qpsbgd/annealer.hpp"
#include "qpsbgd/datasets.hpp"
#include "qpsbgd/diagnostics.hpp"
#include "qpsbgd/errors.hpp"
#include "qpsbgd/experiment.hpp"
#include "qpsbgd/qubo.hpp"
#include "qpsbgd/qubo_io.hpp"

using namespace qpsbgd;

namespace {

struct TrainFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> solver;
  std::optional<std::string> url;
  std::optional<std::string> optimizer;
  std::optional<double> alpha;
  std::optional<long> epochs;
  std::optional<std::string> metrics;
};

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// Flag overrides are applied to the JSON so they go through the same validation.
ExperimentConfig config_with_overrides(const TrainFlags& f) {
  nlohmann::json j = read_json(f.config);
  if (f.seed) j["seeds"] = {*f.seed};
  if (f.optimizer && j["optimizer"].value("kind", "") != *f.optimizer) {
    // A config's learning rate belongs to its optimizer; the new one starts from its default.
    j["optimizer"]["kind"] = *f.optimizer;
    j["optimizer"].erase("alpha");
  }
  if (f.solver) {
    auto& solver = j["optimizer"]["solver"];
    if (!solver.is_object() || solver.value("kind", "") != *f.solver) solver = nlohmann::json{{"kind", *f.solver}};
  }
  if (f.url) j["optimizer"]["solver"]["url"] = *f.url;
  if (f.alpha) j["optimizer"]["alpha"] = *f.alpha;
  if (f.epochs) j["epochs"] = *f.epochs;
  if (f.metrics) j["output"]["metrics"] = *f.metrics;
  return parse_config(j);
}

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--config", f.config, "experiment JSON")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "run only this seed");
  cmd->add_option("--solver", f.solver, "QUBO solver")->check(CLI::IsMember({"exhaustive", "sa", "remote"}));
  cmd->add_option("--url", f.url, "remote sampler base URL");
  cmd->add_option("--optimizer", f.optimizer, "optimizer")
      ->check(CLI::IsMember({"qpsbgd", "bc_sgd", "bc_signsgd", "proxquant"}));
  cmd->add_option("--alpha", f.alpha, "learning rate")->check(CLI::PositiveNumber);
  cmd->add_option("--epochs", f.epochs, "number of epochs")->check(CLI::NonNegativeNumber);
  cmd->add_option("--metrics", f.metrics, "metrics CSV path");
}

int run_train(const TrainFlags& f) {
  const auto cfg = config_with_overrides(f);
  const auto result = run_experiment(cfg);
  if (cfg.metrics_path.empty()) {
    write_metrics_csv(std::cout, result.metrics);
  }
  const long last = cfg.epochs;
  std::cerr << cfg.name << ": " << to_string(cfg.optimizer.kind) << " alpha=" << cfg.alpha() << ", "
            << cfg.seeds.size() << " seed(s), epoch " << last << " mean train loss " << result.mean_loss("train", last)
            << " acc " << result.mean_accuracy("train", last);
  if (!std::isnan(result.mean_accuracy("test", last))) std::cerr << ", test acc " << result.mean_accuracy("test", last);
  std::cerr << '\n';
  return 0;
}

struct SolveFlags {
  std::string input;
  std::string solver = "exhaustive";
  std::uint64_t seed = 0;
  int sweeps = 1000;
  int restarts = 32;
  std::string url;
  int num_reads = 100;
};

int run_solve(const SolveFlags& f) {
  const auto problem = read_qubo_file(f.input);
  SolverConfig cfg;
  cfg.kind = solver_from_string(f.solver);
  cfg.sa.sweeps = f.sweeps;
  cfg.sa.restarts = f.restarts;
  cfg.endpoint.base_url = f.url;
  cfg.endpoint.num_reads = f.num_reads;
  const auto result = make_solver(cfg)->solve(problem, f.seed);
  std::cout << "best " << to_string(result.best) << '\n'
            << "energy " << std::setprecision(12) << result.best_energy << '\n'
            << "reads " << result.reads << '\n';
  return 0;
}

int run_spectral_gap(const std::string& input, int grid, const std::string& output) {
  const auto problem = read_qubo_file(input);
  const auto spectrum = spectral_gap(problem, grid);
  std::ofstream file;
  if (!output.empty()) {
    file.open(output);
    if (!file) throw IoError("cannot write " + output);
  }
  std::ostream& out = output.empty() ? std::cout : file;
  const Index levels = std::min<Index>(spectrum.levels.front().size(), 16);
  out << 's';
  for (Index k = 0; k < levels; ++k) out << ",E_" << k;
  out << '\n' << std::setprecision(12);
  for (std::size_t i = 0; i < spectrum.grid.size(); ++i) {
    out << spectrum.grid[i];
    for (Index k = 0; k < levels; ++k) out << ',' << spectrum.levels[i][k];
    out << '\n';
  }
  std::cerr << "min gap " << spectrum.min_gap << " at s=" << spectrum.argmin_s << "; ground multiplicity at s=1 "
            << spectrum.final_ground_multiplicity << ", gap above it " << spectrum.min_excited_gap << " at s="
            << spectrum.argmin_excited_s << '\n';
  return 0;
}

int run_cdp(std::optional<long> k, std::optional<long> n, const TrainFlags& f) {
  if (k || n) {
    if (!k || !n) throw CLI::ValidationError("--k/--n", "both --k and --n are required");
    std::cout << "k,n,z\n" << *k << ',' << *n << ',' << std::setprecision(6) << cdp_z(*k, *n) << '\n';
    return 0;
  }
  if (f.config.empty()) throw CLI::ValidationError("--config", "give --config for a training run or --k and --n");
  auto cfg = config_with_overrides(f);
  if (cfg.optimizer.kind != OptimizerKind::QpSbgd) throw ConfigError("cdp-test needs the qpsbgd optimizer");
  cfg.cdp = true;
  const auto result = run_experiment(cfg);
  write_cdp_csv(std::cout, result.cdp);
  const auto pooled = result.pooled_cdp();
  std::cerr << "pooled k=" << pooled.k << " n=" << pooled.n << " Z=" << pooled.z() << '\n';
  return 0;
}

struct DumpFlags {
  std::string dataset;
  std::uint64_t seed = 0;
  std::vector<int> digit_pair{1, 7};
  std::optional<Index> feature_subset;
  std::string output;
};

int run_dump(const DumpFlags& f) {
  std::ofstream file;
  if (!f.output.empty()) {
    file.open(f.output);
    if (!file) throw IoError("cannot write " + f.output);
  }
  std::ostream& out = f.output.empty() ? std::cout : file;
  DatasetConfig d;
  if (f.dataset == "karate") {
    write_csv(out, karate_club(f.seed));
    return 0;
  }
  if (f.dataset == "blobs") {
    write_csv(out, make_blobs(f.seed));
  } else if (f.dataset == "adult") {
    write_csv(out, load_adult(d.adult_train, d.adult_test, f.feature_subset, f.seed));
  } else {
    if (f.digit_pair.size() != 2) throw CLI::ValidationError("--digit-pair", "expects two digits");
    const auto images = read_idx_images(d.mnist_images);
    const auto labels = read_idx_labels(d.mnist_labels);
    write_csv(out, mnist_line_features(images, labels, {f.digit_pair[0], f.digit_pair[1]}, f.seed));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"QP-SBGD: binary network training by QUBO-projected gradients"};
  app.require_subcommand(1);

  TrainFlags train;
  auto* train_cmd = app.add_subcommand("train", "run an experiment config");
  add_train_flags(train_cmd, train);

  SolveFlags solve;
  auto* solve_cmd = app.add_subcommand("solve-qubo", "minimize a QUBO text file");
  solve_cmd->add_option("--input", solve.input, "QUBO text file")->required()->check(CLI::ExistingFile);
  solve_cmd->add_option("--solver", solve.solver)->check(CLI::IsMember({"exhaustive", "sa", "remote"}));
  solve_cmd->add_option("--seed", solve.seed);
  solve_cmd->add_option("--sweeps", solve.sweeps)->check(CLI::PositiveNumber);
  solve_cmd->add_option("--restarts", solve.restarts)->check(CLI::PositiveNumber);
  solve_cmd->add_option("--url", solve.url, "remote sampler base URL");
  solve_cmd->add_option("--num-reads", solve.num_reads)->check(CLI::PositiveNumber);

  std::string gap_input, gap_output;
  int grid = 101;
  auto* gap_cmd = app.add_subcommand("spectral-gap", "annealing spectrum of a QUBO text file");
  gap_cmd->add_option("--input", gap_input)->required()->check(CLI::ExistingFile);
  gap_cmd->add_option("--grid", grid, "points on [0, 1]")->check(CLI::Range(3, 100000));
  gap_cmd->add_option("--output", gap_output, "CSV path (default stdout)");

  std::optional<long> cdp_k, cdp_n;
  TrainFlags cdp_train;
  auto* cdp_cmd = app.add_subcommand("cdp-test", "binomial Z for sign agreement, from counts or a training run");
  cdp_cmd->add_option("--k", cdp_k, "agreements")->check(CLI::NonNegativeNumber);
  cdp_cmd->add_option("--n", cdp_n, "comparisons")->check(CLI::PositiveNumber);
  cdp_cmd->add_option("--config", cdp_train.config, "experiment JSON")->check(CLI::ExistingFile);
  cdp_cmd->add_option("--seed", cdp_train.seed);
  cdp_cmd->add_option("--solver", cdp_train.solver)->check(CLI::IsMember({"exhaustive", "sa", "remote"}));
  cdp_cmd->add_option("--epochs", cdp_train.epochs)->check(CLI::NonNegativeNumber);

  DumpFlags dump;
  auto* datasets_cmd = app.add_subcommand("datasets", "dataset utilities");
  datasets_cmd->require_subcommand(1);
  auto* dump_cmd = datasets_cmd->add_subcommand("dump", "write a dataset as CSV");
  dump_cmd->add_option("--dataset", dump.dataset)->required()->check(CLI::IsMember({"blobs", "adult", "mnist", "karate"}));
  dump_cmd->add_option("--seed", dump.seed);
  dump_cmd->add_option("--digit-pair", dump.digit_pair)->expected(2)->delimiter(',');
  dump_cmd->add_option("--feature-subset", dump.feature_subset)->check(CLI::Range(1, 123));
  dump_cmd->add_option("--output", dump.output);

  try {
    app.parse(argc, argv);
    if (*train_cmd) return run_train(train);
    if (*solve_cmd) return run_solve(solve);
    if (*gap_cmd) return run_spectral_gap(gap_input, grid, gap_output);
    if (*cdp_cmd) return run_cdp(cdp_k, cdp_n, cdp_train);
    if (*dump_cmd) return run_dump(dump);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
