#include "qpsbgd/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "qpsbgd/errors.hpp"

namespace qpsbgd {

namespace {

constexpr double kZeroGradient = 1e-12;

int sign_of(double x) { return x >= 0.0 ? 1 : -1; }

}  // namespace

double cdp_z(long k, long n) {
  if (n <= 0) throw EmptyTallyError("CDP tally is empty: no coordinates to compare");
  if (k < 0 || k > n) throw std::invalid_argument("CDP tally needs 0 <= k <= n");
  const double nn = static_cast<double>(n);
  return (static_cast<double>(k) - 0.5 * nn) / std::sqrt(0.25 * nn);
}

double CdpTally::z() const { return cdp_z(k, n); }

CdpTally& CdpTally::operator+=(const CdpTally& other) {
  k += other.k;
  n += other.n;
  return *this;
}

CdpTally cdp_test(std::span<const double> projected_signs, std::span<const double> true_gradient) {
  if (projected_signs.size() != true_gradient.size()) {
    throw std::invalid_argument("cdp_test: projected signs and gradient differ in length");
  }
  CdpTally tally;
  for (std::size_t i = 0; i < true_gradient.size(); ++i) {
    if (std::abs(true_gradient[i]) < kZeroGradient) continue;
    ++tally.n;
    if (sign_of(projected_signs[i]) == sign_of(true_gradient[i])) ++tally.k;
  }
  if (tally.n == 0) throw EmptyTallyError("CDP tally is empty: every gradient coordinate is zero");
  return tally;
}

CdpTally cdp_test(const Matrix& projected_signs, const Matrix& true_gradient) {
  if (projected_signs.rows() != true_gradient.rows() || projected_signs.cols() != true_gradient.cols()) {
    throw std::invalid_argument("cdp_test: shape mismatch");
  }
  return cdp_test(std::span<const double>(projected_signs.data(), static_cast<std::size_t>(projected_signs.size())),
                  std::span<const double>(true_gradient.data(), static_cast<std::size_t>(true_gradient.size())));
}

CdpTally cdp_count(const Matrix& projected_signs, const Matrix& true_gradient) {
  try {
    return cdp_test(projected_signs, true_gradient);
  } catch (const EmptyTallyError&) {
    return {};
  }
}

Matrix build_anneal_hamiltonian(const QuboProblem& problem, double s) {
  const std::size_t n = problem.size();
  if (n > kAnnealCap) {
    throw CapacityError("annealing Hamiltonian is capped at n = " + std::to_string(kAnnealCap) + ", got n = " +
                        std::to_string(n));
  }
  if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("annealing parameter s must lie in [0, 1]");
  const Index dim = Index{1} << n;
  Matrix h = Matrix::Zero(dim, dim);
  for (Index b = 0; b < dim; ++b) {
    const SpinVector g = SpinVector::from_index(static_cast<std::uint64_t>(b), n).negated();
    h(b, b) = s * energy(problem, g);
    for (std::size_t i = 0; i < n; ++i) h(b, b ^ (Index{1} << i)) -= 1.0 - s;
  }
  return h;
}

AnnealSpectrum spectral_gap(const QuboProblem& problem, int grid_points) {
  if (grid_points < 3) throw std::invalid_argument("spectral_gap needs at least 3 grid points");
  AnnealSpectrum spectrum;
  for (int k = 0; k < grid_points; ++k) {
    const double s = static_cast<double>(k) / (grid_points - 1);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(build_anneal_hamiltonian(problem, s), Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
      std::ostringstream msg;
      msg << "eigensolver did not converge at s = " << s;
      throw NumericError(msg.str());
    }
    spectrum.grid.push_back(s);
    spectrum.levels.push_back(solver.eigenvalues());
  }

  const Vector& last = spectrum.levels.back();
  const double tie = kEnergyTieTolerance * std::max(1.0, std::abs(last[0]));
  std::size_t d = 1;
  while (d < static_cast<std::size_t>(last.size()) && last[static_cast<Index>(d)] - last[0] <= tie) ++d;
  spectrum.final_ground_multiplicity = d;

  spectrum.min_gap = std::numeric_limits<double>::infinity();
  spectrum.min_excited_gap = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < spectrum.grid.size(); ++k) {
    const Vector& e = spectrum.levels[k];
    if (e.size() < 2) break;
    const double gap = std::max(0.0, e[1] - e[0]);
    if (gap < spectrum.min_gap) {
      spectrum.min_gap = gap;
      spectrum.argmin_s = spectrum.grid[k];
    }
    if (d < static_cast<std::size_t>(e.size())) {
      const double excited = std::max(0.0, e[static_cast<Index>(d)] - e[0]);
      if (excited < spectrum.min_excited_gap) {
        spectrum.min_excited_gap = excited;
        spectrum.argmin_excited_s = spectrum.grid[k];
      }
    }
  }
  return spectrum;
}

Matrix sample_similarity(std::span<const SpinVector> samples, std::size_t top_k) {
  if (top_k > samples.size()) {
    throw std::invalid_argument("sample_similarity: top_k = " + std::to_string(top_k) + " exceeds the " +
                                std::to_string(samples.size()) + " available samples");
  }
  const Index k = static_cast<Index>(top_k);
  Matrix sim(k, k);
  for (Index a = 0; a < k; ++a) {
    sim(a, a) = 1.0;
    for (Index b = a + 1; b < k; ++b) {
      sim(a, b) = sim(b, a) = jaccard(samples[static_cast<std::size_t>(a)], samples[static_cast<std::size_t>(b)]);
    }
  }
  return sim;
}

}  // namespace qpsbgd
