#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qpsbgd/linalg.hpp"
#include "qpsbgd/net.hpp"

namespace qpsbgd {

/// Fisher-Yates with explicit index draws, so the order does not depend on
/// the standard library's shuffle implementation.
template <typename T>
void seeded_shuffle(std::vector<T>& v, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

struct TabularDataset {
  Matrix x;                 // N x d
  std::vector<int> y;       // class ids in [0, num_classes)
  std::vector<Index> train; // row ids
  std::vector<Index> test;
  int num_classes = 2;
  std::uint64_t seed = 0;

  Index dim() const { return x.cols(); }
};

struct GraphDataset {
  Matrix adjacency;  // symmetric 0/1, zero diagonal
  Matrix x;          // node features in {-1, +1}
  std::vector<int> y;
  std::vector<Index> train;  // node ids
  std::vector<Index> test;
  int num_classes = 0;
};

/// Two Gaussian blobs in 2-D (labels 0/1, 50/50), lifted to 3-D by a
/// constant intercept column. Redrawn until some w in {-1,+1}^3 separates
/// the classes with margin, so a binary logistic regression can fit them.
/// Every point is in the training split.
TabularDataset make_blobs(std::uint64_t seed, Index per_class = 50);

/// True if some w in {-1,+1}^d classifies every row with |x.w| >= margin.
bool binary_separable(const Matrix& x, std::span<const int> labels, double margin);

struct SvmlightData {
  Matrix x;  // entries +1 for listed features, -1 otherwise
  std::vector<int> y;  // 1 for a positive label, 0 otherwise
};

/// Parses svmlight text with 1-based feature indices in [1, dim].
SvmlightData read_svmlight(const std::string& path, Index dim);

inline constexpr Index kAdultFeatures = 123;

/// a1a/a1a.t pair; optional seeded choice of `feature_subset` columns.
TabularDataset load_adult(const std::string& train_path, const std::string& test_path,
                          std::optional<Index> feature_subset = std::nullopt, std::uint64_t seed = 0);

struct IdxImages {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;  // count * rows * cols, row-major per image

  std::span<const std::uint8_t> image(std::size_t i) const {
    return {pixels.data() + i * rows * cols, rows * cols};
  }
};

IdxImages read_idx_images(const std::string& path);
std::vector<int> read_idx_labels(const std::string& path);

inline constexpr int kMnistLines = 16;

/// 16 half-plane features of one image: keypoints are pixels above half
/// the image's maximum intensity; line k runs through the intensity-weighted
/// centroid at angle k*pi/16 with normal angle k*pi/16 + pi/2. Feature k is
/// +1 when at least as many keypoints lie on the positive side as on the
/// negative side.
std::vector<int> line_features(std::span<const std::uint8_t> image, std::size_t rows, std::size_t cols);

/// Binary task digit_pair.first -> 0, digit_pair.second -> 1 with a seeded
/// train/test split of `train_size` / up to `test_size` images.
TabularDataset mnist_line_features(const IdxImages& images, std::span<const int> labels,
                                   std::pair<int, int> digit_pair, std::uint64_t seed,
                                   std::size_t train_size = 500, std::size_t test_size = 3000);

/// Zachary's karate club: 34 nodes, 4 communities, 6-bit +-1 node-index
/// encoding, 5 training nodes per community chosen by `seed`.
GraphDataset karate_club(std::uint64_t seed = 0);

void write_csv(std::ostream& out, const TabularDataset& data);
void write_csv(std::ostream& out, const GraphDataset& data);

}  // namespace qpsbgd
