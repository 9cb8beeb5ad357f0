#include "qpsbgd/qubo.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "qpsbgd/errors.hpp"

namespace qpsbgd {

SpinVector::SpinVector(std::vector<int> values) : values_(std::move(values)) {
  for (int v : values_) {
    if (v != -1 && v != 1) {
      throw std::invalid_argument("spin entries must be -1 or +1, got " + std::to_string(v));
    }
  }
}

SpinVector SpinVector::filled(std::size_t n, int value) {
  return SpinVector(std::vector<int>(n, value));
}

SpinVector SpinVector::from_index(std::uint64_t bits, std::size_t n) {
  std::vector<int> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    values[i] = ((bits >> (n - 1 - i)) & 1U) ? 1 : -1;
  }
  return SpinVector(std::move(values));
}

std::uint64_t SpinVector::to_index() const {
  if (values_.size() > 64) {
    throw CapacityError("spin vector too long for an index");
  }
  std::uint64_t bits = 0;
  for (int v : values_) {
    bits = (bits << 1) | (v > 0 ? 1U : 0U);
  }
  return bits;
}

Vector SpinVector::to_vector() const {
  Vector out(static_cast<Eigen::Index>(values_.size()));
  for (std::size_t i = 0; i < values_.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = values_[i];
  }
  return out;
}

SpinVector SpinVector::negated() const {
  SpinVector out = *this;
  for (int& v : out.values_) v = -v;
  return out;
}

std::string to_string(const SpinVector& g) {
  std::ostringstream os;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (i) os << ' ';
    os << (g[i] > 0 ? "+1" : "-1");
  }
  return os.str();
}

QuboProblem::QuboProblem(Matrix quadratic, Vector linear, double offset)
    : quadratic_(std::move(quadratic)), linear_(std::move(linear)), offset_(offset) {
  const auto n = linear_.size();
  if (n < 1) {
    throw std::invalid_argument("QUBO needs at least one variable");
  }
  if (quadratic_.rows() != n || quadratic_.cols() != n) {
    throw std::invalid_argument("QUBO quadratic matrix must be n x n with n = len(linear)");
  }
  if (!quadratic_.allFinite() || !linear_.allFinite() || !std::isfinite(offset_)) {
    throw std::invalid_argument("QUBO coefficients must be finite");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double a = quadratic_(i, j);
      const double b = quadratic_(j, i);
      if (std::abs(a - b) > 1e-12 * std::max({1.0, std::abs(a), std::abs(b)})) {
        throw std::invalid_argument("QUBO quadratic matrix is not symmetric at (" +
                                    std::to_string(i) + "," + std::to_string(j) + ")");
      }
      // Snap to exact symmetry so energies do not depend on summation order.
      quadratic_(j, i) = a;
    }
  }
}

QuboProblem QuboProblem::zero(std::size_t n) {
  const auto m = static_cast<Eigen::Index>(n);
  return QuboProblem(Matrix::Zero(m, m), Vector::Zero(m), 0.0);
}

double QuboProblem::max_abs_coefficient() const {
  return std::max(quadratic_.cwiseAbs().maxCoeff(), linear_.cwiseAbs().maxCoeff());
}

QuboProblem QuboProblem::with_offset(double offset) const {
  QuboProblem copy = *this;
  copy.offset_ = offset;
  return copy;
}

double energy(const QuboProblem& problem, const SpinVector& g) {
  if (g.size() != problem.size()) {
    throw std::invalid_argument("spin vector length " + std::to_string(g.size()) +
                                " does not match problem size " + std::to_string(problem.size()));
  }
  const Vector x = g.to_vector();
  return x.dot(problem.quadratic() * x) + problem.linear().dot(x) + problem.offset();
}

bool preferred(double energy_a, const SpinVector& a, double energy_b, const SpinVector& b) {
  const double tol = kEnergyTieTolerance * std::max({1.0, std::abs(energy_a), std::abs(energy_b)});
  if (energy_a < energy_b - tol) return true;
  if (energy_a > energy_b + tol) return false;
  return a < b;
}

namespace {

void sort_samples(std::vector<Sample>& samples) {
  std::sort(samples.begin(), samples.end(), [](const Sample& x, const Sample& y) {
    if (x.energy != y.energy) return x.energy < y.energy;
    return x.spins < y.spins;
  });
}

// Incrementally maintained local fields  h_k = sum_{j != k} Q_kj g_j.
class LocalFields {
 public:
  LocalFields(const QuboProblem& p, const std::vector<int>& spins) : p_(p), h_(p.size(), 0.0) {
    const auto& q = p.quadratic();
    const std::size_t n = p.size();
    for (std::size_t k = 0; k < n; ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != k) acc += q(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) * spins[j];
      }
      h_[k] = acc;
    }
  }

  // Energy change of flipping spin k whose current value is gk.
  double delta(std::size_t k, int gk) const {
    return -2.0 * gk * (2.0 * h_[k] + p_.linear()[static_cast<Eigen::Index>(k)]);
  }

  // Must be called after spin k changed from old_gk to -old_gk.
  void apply_flip(std::size_t k, int old_gk) {
    const auto& q = p_.quadratic();
    const double step = -2.0 * old_gk;
    const auto kk = static_cast<Eigen::Index>(k);
    for (std::size_t j = 0; j < h_.size(); ++j) {
      if (j != k) h_[j] += q(static_cast<Eigen::Index>(j), kk) * step;
    }
  }

 private:
  const QuboProblem& p_;
  std::vector<double> h_;
};

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

SolveResult solve_exhaustive(const QuboProblem& problem, std::size_t cap) {
  const std::size_t n = problem.size();
  if (n > cap || n > 62) {
    throw CapacityError("exhaustive search capped at n = " + std::to_string(cap) + ", got n = " +
                        std::to_string(n));
  }
  const std::uint64_t states = std::uint64_t{1} << n;

  SolveResult result;
  result.reads = 1;

  if (n <= kExhaustiveSampleLimit) {
    result.samples.reserve(states);
    for (std::uint64_t idx = 0; idx < states; ++idx) {
      SpinVector g = SpinVector::from_index(idx, n);
      const double e = energy(problem, g);
      result.samples.push_back({std::move(g), e});
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < result.samples.size(); ++k) {
      if (preferred(result.samples[k].energy, result.samples[k].spins, result.samples[best].energy,
                    result.samples[best].spins)) {
        best = k;
      }
    }
    result.best = result.samples[best].spins;
    result.best_energy = result.samples[best].energy;
    sort_samples(result.samples);
    return result;
  }

  // Gray-code walk: state t differs from t-1 in bit ctz(t). Bit b maps to
  // spin n-1-b so that the state index is the lexicographic index.
  std::vector<int> spins(n, -1);
  LocalFields fields(problem, spins);
  SpinVector current(spins);
  double e = energy(problem, current);
  std::uint64_t best_idx = 0;
  double best_e = e;
  std::uint64_t gray = 0;
  for (std::uint64_t t = 1; t < states; ++t) {
    const int bit = std::countr_zero(t);
    const std::size_t k = n - 1 - static_cast<std::size_t>(bit);
    const int old = spins[k];
    e += fields.delta(k, old);
    spins[k] = -old;
    fields.apply_flip(k, old);
    gray ^= std::uint64_t{1} << bit;
    const double tol = kEnergyTieTolerance * std::max({1.0, std::abs(e), std::abs(best_e)});
    if (e < best_e - tol || (e <= best_e + tol && gray < best_idx)) {
      best_e = e;
      best_idx = gray;
    }
  }
  result.best = SpinVector::from_index(best_idx, n);
  result.best_energy = energy(problem, result.best);
  result.samples.push_back({result.best, result.best_energy});
  return result;
}

void SaParams::validate() const {
  if (sweeps < 1) throw std::invalid_argument("SA sweeps must be >= 1");
  if (restarts < 1) throw std::invalid_argument("SA restarts must be >= 1");
  if (!(t_cold > 0.0) || !std::isfinite(t_cold)) {
    throw std::invalid_argument("SA t_cold must be > 0");
  }
  if (t_hot && !(*t_hot > t_cold)) {
    throw std::invalid_argument("SA requires t_hot > t_cold");
  }
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

SolveResult solve_sa(const QuboProblem& problem, const SaParams& params, std::uint64_t seed) {
  params.validate();
  const std::size_t n = problem.size();
  const double t_cold = params.t_cold;
  const double t_hot =
      params.t_hot.value_or(std::max(problem.max_abs_coefficient() * static_cast<double>(n), 10.0 * t_cold));
  const double ratio = params.sweeps > 1 ? std::pow(t_cold / t_hot, 1.0 / (params.sweeps - 1)) : 1.0;

  SolveResult result;
  result.reads = params.restarts;
  result.samples.reserve(static_cast<std::size_t>(params.restarts));

  for (int r = 0; r < params.restarts; ++r) {
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(r)));
    std::vector<int> spins(n, 1);
    if (r > 0) {
      for (auto& s : spins) s = (rng() >> 63) ? 1 : -1;
    }
    LocalFields fields(problem, spins);
    double e = energy(problem, SpinVector(spins));
    std::vector<int> best = spins;
    double best_e = e;

    double temperature = params.sweeps > 1 ? t_hot : t_cold;
    for (int sweep = 0; sweep < params.sweeps; ++sweep) {
      for (std::size_t k = 0; k < n; ++k) {
        const double d = fields.delta(k, spins[k]);
        if (d <= 0.0 || uniform01(rng) < std::exp(-d / temperature)) {
          const int old = spins[k];
          spins[k] = -old;
          fields.apply_flip(k, old);
          e += d;
        }
      }
      if (e < best_e) {
        best_e = e;
        best = spins;
      }
      temperature *= ratio;
    }

    // Greedy single-flip descent from the best state seen.
    LocalFields polish(problem, best);
    bool improved = true;
    while (improved) {
      improved = false;
      for (std::size_t k = 0; k < n; ++k) {
        if (polish.delta(k, best[k]) < -1e-12) {
          const int old = best[k];
          best[k] = -old;
          polish.apply_flip(k, old);
          improved = true;
        }
      }
    }

    SpinVector chain_best(best);
    const double exact = energy(problem, chain_best);
    result.samples.push_back({std::move(chain_best), exact});
  }

  std::size_t best = 0;
  for (std::size_t k = 1; k < result.samples.size(); ++k) {
    if (preferred(result.samples[k].energy, result.samples[k].spins, result.samples[best].energy,
                  result.samples[best].spins)) {
      best = k;
    }
  }
  result.best = result.samples[best].spins;
  result.best_energy = result.samples[best].energy;
  sort_samples(result.samples);
  return result;
}

double jaccard(const SpinVector& a, const SpinVector& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("jaccard requires equal-length spin vectors");
  }
  std::size_t both = 0;
  std::size_t either = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool in_a = a[i] > 0;
    const bool in_b = b[i] > 0;
    both += (in_a && in_b) ? 1 : 0;
    either += (in_a || in_b) ? 1 : 0;
  }
  if (either == 0) return 1.0;
  return static_cast<double>(both) / static_cast<double>(either);
}

SolveResult ExhaustiveSolver::solve(const QuboProblem& problem, std::uint64_t /*seed*/) const {
  return solve_exhaustive(problem, cap_);
}

SaSolver::SaSolver(SaParams params) : params_(std::move(params)) { params_.validate(); }

SolveResult SaSolver::solve(const QuboProblem& problem, std::uint64_t seed) const {
  return solve_sa(problem, params_, seed);
}

}  // namespace qpsbgd
