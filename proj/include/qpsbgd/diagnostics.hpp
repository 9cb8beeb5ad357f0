#pragma once

#include <span>
#include <vector>

#include "qpsbgd/linalg.hpp"
#include "qpsbgd/qubo.hpp"

namespace qpsbgd {

/// Sign agreements between projected and full-dataset gradients.
struct CdpTally {
  long k = 0;
  long n = 0;

  /// (k - n/2) / sqrt(n/4); throws EmptyTallyError when n == 0.
  double z() const;
  CdpTally& operator+=(const CdpTally& other);
};

/// Binomial Z statistic for k successes in n trials at p = 1/2.
double cdp_z(long k, long n);

/// Counts coordinates where sign(projected) == sign(true_gradient),
/// skipping coordinates with |true_gradient| < 1e-12. Throws
/// EmptyTallyError if nothing is left to compare.
CdpTally cdp_test(std::span<const double> projected_signs, std::span<const double> true_gradient);
CdpTally cdp_test(const Matrix& projected_signs, const Matrix& true_gradient);

/// Same, but returns an empty tally instead of throwing; used for pooling.
CdpTally cdp_count(const Matrix& projected_signs, const Matrix& true_gradient);

inline constexpr std::size_t kAnnealCap = 10;

/// Dense H(s) = (1-s) H_B + s H_P on 2^n basis states, H_B = -sum_i sigma_x^(i).
/// Basis index b holds the spins SpinVector::from_index(b, n) negated, so
/// index 0 is the all-(+1) state. H_P is diagonal with H_P[g] = energy(p, g).
Matrix build_anneal_hamiltonian(const QuboProblem& problem, double s);

struct AnnealSpectrum {
  std::vector<double> grid;
  std::vector<Vector> levels;  // ascending eigenvalues per grid point
  double min_gap = 0.0;        // min over the grid of E_1 - E_0
  double argmin_s = 0.0;
  /// Ground multiplicity at s = 1 and the minimum gap to the first level
  /// above that many, i.e. to the lowest level that does not end in the
  /// ground manifold. Equals min_gap when the final ground state is unique.
  std::size_t final_ground_multiplicity = 1;
  double min_excited_gap = 0.0;
  double argmin_excited_s = 0.0;
};

/// Eigenvalues of H(s) on `grid_points` uniform points of [0, 1].
AnnealSpectrum spectral_gap(const QuboProblem& problem, int grid_points);

/// Pairwise Jaccard similarity of the first `top_k` samples.
Matrix sample_similarity(std::span<const SpinVector> samples, std::size_t top_k);

}  // namespace qpsbgd
