#pragma once

// Reference implementations used only by tests. They deliberately avoid the
// library's own code paths: plain loops, no Gray codes, no Eigen solvers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "qpsbgd/linalg.hpp"
#include "qpsbgd/qubo.hpp"

namespace oracle {

using qpsbgd::Matrix;
using qpsbgd::Vector;

// Spin vector number `code` in plain binary counting, most significant spin first.
inline std::vector<int> spins_of(std::uint64_t code, int n) {
  std::vector<int> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = (code >> (n - 1 - i)) & 1U ? 1 : -1;
  return g;
}

inline double ising_energy(const Matrix& q, const Vector& s, double offset, const std::vector<int>& g) {
  double e = offset;
  const auto n = g.size();
  for (std::size_t i = 0; i < n; ++i) {
    e += s[static_cast<Eigen::Index>(i)] * g[i];
    for (std::size_t j = 0; j < n; ++j) {
      e += q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * g[i] * g[j];
    }
  }
  return e;
}

// sum_i (v_i - g . u_i)^2 with u_i the columns of `u`.
inline double binary_map_residual(const Matrix& u, const Vector& v, const std::vector<int>& g) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < u.cols(); ++i) {
    double dot = 0.0;
    for (Eigen::Index k = 0; k < u.rows(); ++k) dot += g[static_cast<std::size_t>(k)] * u(k, i);
    total += (v[i] - dot) * (v[i] - dot);
  }
  return total;
}

struct Minimum {
  std::vector<int> argmin;  // first minimizer in counting order, i.e. lexicographically smallest
  double value = std::numeric_limits<double>::infinity();
  std::vector<double> all;  // value per code
};

inline Minimum enumerate(int n, const std::function<double(const std::vector<int>&)>& f) {
  Minimum best;
  for (std::uint64_t code = 0; code < (std::uint64_t{1} << n); ++code) {
    const auto g = spins_of(code, n);
    const double value = f(g);
    best.all.push_back(value);
    if (value < best.value - 1e-9 * std::max(1.0, std::abs(value))) {
      best.value = value;
      best.argmin = g;
    }
  }
  return best;
}

inline Matrix random_symmetric(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix q(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) q(i, j) = q(j, i) = u(rng);
  }
  return q;
}

inline Vector random_vector(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

inline Matrix random_matrix(std::mt19937_64& rng, int rows, int cols, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = u(rng);
  return m;
}

inline qpsbgd::QuboProblem random_problem(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return qpsbgd::QuboProblem(random_symmetric(rng, n), random_vector(rng, n), u(rng));
}

// Cyclic Jacobi rotations; returns ascending eigenvalues.
inline std::vector<double> jacobi_eigenvalues(Matrix a, int max_sweeps = 100) {
  const Eigen::Index n = a.rows();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-26) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> out;
  for (Eigen::Index i = 0; i < n; ++i) out.push_back(a(i, i));
  std::sort(out.begin(), out.end());
  return out;
}

// Central differences of f at x.
inline Vector numeric_gradient(const std::function<double(const Vector&)>& f, Vector x, double h = 1e-6) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

}  // namespace oracle
