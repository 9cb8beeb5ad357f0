#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qpsbgd/linalg.hpp"

namespace qpsbgd {

/// A point of {-1,+1}^n. Ordering is lexicographic with -1 < +1.
class SpinVector {
 public:
  SpinVector() = default;
  explicit SpinVector(std::vector<int> values);

  static SpinVector filled(std::size_t n, int value);

  /// Spin i is +1 iff bit (n-1-i) of `bits` is set, so integer order on
  /// `bits` equals the lexicographic order on spins.
  static SpinVector from_index(std::uint64_t bits, std::size_t n);
  std::uint64_t to_index() const;

  std::size_t size() const { return values_.size(); }
  int operator[](std::size_t i) const { return values_[i]; }
  void flip(std::size_t i) { values_[i] = -values_[i]; }
  const std::vector<int>& values() const { return values_; }
  Vector to_vector() const;
  SpinVector negated() const;

  auto operator<=>(const SpinVector&) const = default;

 private:
  std::vector<int> values_;
};

std::string to_string(const SpinVector& g);

/// Ising-form objective  g^T Q g + s^T g + offset  over g in {-1,+1}^n.
class QuboProblem {
 public:
  /// Q must be square, symmetric and finite; s must have matching length.
  QuboProblem(Matrix quadratic, Vector linear, double offset = 0.0);

  static QuboProblem zero(std::size_t n);

  std::size_t size() const { return static_cast<std::size_t>(linear_.size()); }
  const Matrix& quadratic() const { return quadratic_; }
  const Vector& linear() const { return linear_; }
  double offset() const { return offset_; }

  /// Largest absolute coefficient among Q and s.
  double max_abs_coefficient() const;

  QuboProblem with_offset(double offset) const;

 private:
  Matrix quadratic_;
  Vector linear_;
  double offset_ = 0.0;
};

double energy(const QuboProblem& problem, const SpinVector& g);

struct Sample {
  SpinVector spins;
  double energy = 0.0;
};

struct SolveResult {
  SpinVector best;
  double best_energy = 0.0;
  std::vector<Sample> samples;  // ascending by (energy, spins)
  int reads = 0;
};

/// Relative tolerance under which two energies count as tied.
inline constexpr double kEnergyTieTolerance = 1e-9;

/// True if (energy_a, a) should replace (energy_b, b) as the incumbent
/// minimizer: strictly lower energy beyond tolerance, or a tie broken
/// lexicographically.
bool preferred(double energy_a, const SpinVector& a, double energy_b, const SpinVector& b);

inline constexpr std::size_t kDefaultExhaustiveCap = 24;
inline constexpr std::size_t kExhaustiveSampleLimit = 12;

/// Exact minimization by enumerating all 2^n states (Gray-code order).
SolveResult solve_exhaustive(const QuboProblem& problem, std::size_t cap = kDefaultExhaustiveCap);

struct SaParams {
  int sweeps = 1000;
  int restarts = 32;
  std::optional<double> t_hot;  // default: max|coefficient| * n
  double t_cold = 1e-3;

  void validate() const;
};

/// Single-spin Metropolis simulated annealing with a geometric schedule.
/// Restart r draws from an independent stream derived from (seed, r);
/// restart 0 starts from the all-(+1) state.
SolveResult solve_sa(const QuboProblem& problem, const SaParams& params, std::uint64_t seed);

/// |A & B| / |A | B| over the +1 supports; 1 when both are empty.
double jaccard(const SpinVector& a, const SpinVector& b);

/// Common interface of the local and remote solvers used by the optimizer.
class QuboSolver {
 public:
  virtual ~QuboSolver() = default;
  virtual SolveResult solve(const QuboProblem& problem, std::uint64_t seed) const = 0;
  virtual std::string name() const = 0;
};

class ExhaustiveSolver final : public QuboSolver {
 public:
  explicit ExhaustiveSolver(std::size_t cap = kDefaultExhaustiveCap) : cap_(cap) {}
  SolveResult solve(const QuboProblem& problem, std::uint64_t seed) const override;
  std::string name() const override { return "exhaustive"; }

 private:
  std::size_t cap_;
};

class SaSolver final : public QuboSolver {
 public:
  explicit SaSolver(SaParams params);
  SolveResult solve(const QuboProblem& problem, std::uint64_t seed) const override;
  std::string name() const override { return "sa"; }
  const SaParams& params() const { return params_; }

 private:
  SaParams params_;
};

/// splitmix64 finalizer; used to derive independent RNG streams.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace qpsbgd
