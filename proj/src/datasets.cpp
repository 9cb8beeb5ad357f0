#include "qpsbgd/datasets.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "qpsbgd/errors.hpp"
#include "qpsbgd/qubo.hpp"

namespace qpsbgd {

namespace {

std::vector<Index> iota_rows(Index begin, Index end) {
  std::vector<Index> out;
  for (Index i = begin; i < end; ++i) out.push_back(i);
  return out;
}

}  // namespace

bool binary_separable(const Matrix& x, std::span<const int> labels, double margin) {
  const Index d = x.cols();
  if (d > 20) throw CapacityError("separability check enumerates 2^d sign vectors; d too large");
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << d); ++bits) {
    Vector w(d);
    for (Index k = 0; k < d; ++k) w[k] = ((bits >> k) & 1U) ? 1.0 : -1.0;
    const Vector score = x * w;
    bool ok = true;
    for (Index i = 0; i < x.rows() && ok; ++i) {
      const double signed_score = labels[static_cast<std::size_t>(i)] == 1 ? score[i] : -score[i];
      ok = signed_score >= margin;
    }
    if (ok) return true;
  }
  return false;
}

TabularDataset make_blobs(std::uint64_t seed, Index per_class) {
  constexpr double kCenter = 1.5;
  constexpr double kSpread = 0.6;
  constexpr double kMargin = 0.1;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, kSpread);

  TabularDataset data;
  data.seed = seed;
  data.num_classes = 2;
  data.x.resize(2 * per_class, 3);
  data.y.resize(static_cast<std::size_t>(2 * per_class));
  for (int attempt = 0; attempt < 1000; ++attempt) {
    for (Index i = 0; i < 2 * per_class; ++i) {
      const int label = i < per_class ? 0 : 1;
      const double c = label == 1 ? kCenter : -kCenter;
      data.x(i, 0) = c + noise(rng);
      data.x(i, 1) = c + noise(rng);
      data.x(i, 2) = 1.0;
      data.y[static_cast<std::size_t>(i)] = label;
    }
    if (binary_separable(data.x, data.y, kMargin)) {
      data.train = iota_rows(0, 2 * per_class);
      return data;
    }
  }
  throw NumericError("could not draw separable blobs");
}

SvmlightData read_svmlight(const std::string& path, Index dim) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open svmlight file: " + path);
  std::vector<std::vector<Index>> active;
  std::vector<int> labels;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string label;
    if (!(ls >> label) || label[0] == '#') continue;
    double value = 0.0;
    try {
      value = std::stod(label);
    } catch (const std::exception&) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": bad label '" + label + "'");
    }
    labels.push_back(value > 0 ? 1 : 0);
    std::vector<Index> row;
    std::string token;
    while (ls >> token) {
      const auto colon = token.find(':');
      if (colon == std::string::npos) {
        throw ParseError(path + ":" + std::to_string(line_no) + ": expected index:value, got '" + token + "'");
      }
      long index = 0;
      double v = 0.0;
      try {
        index = std::stol(token.substr(0, colon));
        v = std::stod(token.substr(colon + 1));
      } catch (const std::exception&) {
        throw ParseError(path + ":" + std::to_string(line_no) + ": malformed feature '" + token + "'");
      }
      if (index < 1 || index > dim) {
        throw ParseError(path + ":" + std::to_string(line_no) + ": feature index " + std::to_string(index) +
                         " outside [1, " + std::to_string(dim) + "]");
      }
      if (v != 0.0) row.push_back(index - 1);
    }
    active.push_back(std::move(row));
  }
  if (in.bad()) throw IoError("read error in " + path);

  SvmlightData data;
  data.x = Matrix::Constant(static_cast<Index>(active.size()), dim, -1.0);
  for (std::size_t r = 0; r < active.size(); ++r) {
    for (Index c : active[r]) data.x(static_cast<Index>(r), c) = 1.0;
  }
  data.y = std::move(labels);
  return data;
}

TabularDataset load_adult(const std::string& train_path, const std::string& test_path,
                          std::optional<Index> feature_subset, std::uint64_t seed) {
  const SvmlightData train = read_svmlight(train_path, kAdultFeatures);
  const SvmlightData test = read_svmlight(test_path, kAdultFeatures);

  std::vector<Index> columns = iota_rows(0, kAdultFeatures);
  if (feature_subset) {
    if (*feature_subset < 1 || *feature_subset > kAdultFeatures) {
      throw std::invalid_argument("feature subset size must be in [1, 123]");
    }
    seeded_shuffle(columns, mix_seed(seed, 0x5EA7));
    columns.resize(static_cast<std::size_t>(*feature_subset));
    std::sort(columns.begin(), columns.end());
  }

  TabularDataset data;
  data.seed = seed;
  data.num_classes = 2;
  const Index n_train = train.x.rows();
  const Index n_test = test.x.rows();
  data.x.resize(n_train + n_test, static_cast<Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    data.x.block(0, static_cast<Index>(c), n_train, 1) = train.x.col(columns[c]);
    data.x.block(n_train, static_cast<Index>(c), n_test, 1) = test.x.col(columns[c]);
  }
  data.y = train.y;
  data.y.insert(data.y.end(), test.y.begin(), test.y.end());
  data.train = iota_rows(0, n_train);
  data.test = iota_rows(n_train, n_train + n_test);
  return data;
}

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& path) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) throw FormatError("truncated IDX header in " + path);
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

}  // namespace

IdxImages read_idx_images(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open IDX image file: " + path);
  const std::uint32_t magic = read_be32(in, path);
  if (magic != 0x00000803) throw FormatError("IDX image magic mismatch in " + path);
  IdxImages images;
  images.count = read_be32(in, path);
  images.rows = read_be32(in, path);
  images.cols = read_be32(in, path);
  images.pixels.resize(images.count * images.rows * images.cols);
  if (!in.read(reinterpret_cast<char*>(images.pixels.data()), static_cast<std::streamsize>(images.pixels.size()))) {
    throw FormatError("truncated IDX image data in " + path);
  }
  return images;
}

std::vector<int> read_idx_labels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open IDX label file: " + path);
  const std::uint32_t magic = read_be32(in, path);
  if (magic != 0x00000801) throw FormatError("IDX label magic mismatch in " + path);
  const std::uint32_t count = read_be32(in, path);
  std::vector<unsigned char> raw(count);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count))) {
    throw FormatError("truncated IDX label data in " + path);
  }
  return {raw.begin(), raw.end()};
}

std::vector<int> line_features(std::span<const std::uint8_t> image, std::size_t rows, std::size_t cols) {
  if (image.size() != rows * cols) throw std::invalid_argument("image size does not match rows*cols");
  const std::uint8_t peak = image.empty() ? 0 : *std::max_element(image.begin(), image.end());
  std::vector<int> features(kMnistLines, 1);
  if (peak == 0) return features;

  double mass = 0.0, cx = 0.0, cy = 0.0;
  std::vector<std::array<double, 2>> keypoints;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = static_cast<double>(image[r * cols + c]) / peak;
      mass += v;
      cx += v * static_cast<double>(c);
      cy += v * static_cast<double>(r);
      if (v > 0.5) keypoints.push_back({static_cast<double>(c), static_cast<double>(r)});
    }
  }
  cx /= mass;
  cy /= mass;

  for (int k = 0; k < kMnistLines; ++k) {
    const double normal_angle = k * std::numbers::pi / kMnistLines + std::numbers::pi / 2.0;
    const double nx = std::cos(normal_angle);
    const double ny = std::sin(normal_angle);
    int positive = 0, negative = 0;
    for (const auto& p : keypoints) {
      const double d = nx * (p[0] - cx) + ny * (p[1] - cy);
      // Keypoints on the line (up to rounding) count for neither side.
      if (d > 1e-9) ++positive;
      else if (d < -1e-9) ++negative;
    }
    features[static_cast<std::size_t>(k)] = positive >= negative ? 1 : -1;
  }
  return features;
}

TabularDataset mnist_line_features(const IdxImages& images, std::span<const int> labels,
                                   std::pair<int, int> digit_pair, std::uint64_t seed, std::size_t train_size,
                                   std::size_t test_size) {
  if (labels.size() != images.count) throw std::invalid_argument("image/label count mismatch");
  if (digit_pair.first == digit_pair.second) throw std::invalid_argument("digit pair must be two distinct digits");
  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == digit_pair.first || labels[i] == digit_pair.second) chosen.push_back(i);
  }
  if (chosen.size() <= train_size) {
    throw std::invalid_argument("not enough images of digits " + std::to_string(digit_pair.first) + "/" +
                                std::to_string(digit_pair.second) + " for the training split");
  }
  seeded_shuffle(chosen, seed);
  chosen.resize(std::min(chosen.size(), train_size + test_size));

  TabularDataset data;
  data.seed = seed;
  data.num_classes = 2;
  data.x.resize(static_cast<Index>(chosen.size()), kMnistLines);
  data.y.resize(chosen.size());
  for (std::size_t k = 0; k < chosen.size(); ++k) {
    const auto f = line_features(images.image(chosen[k]), images.rows, images.cols);
    for (int j = 0; j < kMnistLines; ++j) data.x(static_cast<Index>(k), j) = f[static_cast<std::size_t>(j)];
    data.y[k] = labels[chosen[k]] == digit_pair.second ? 1 : 0;
  }
  data.train = iota_rows(0, static_cast<Index>(train_size));
  data.test = iota_rows(static_cast<Index>(train_size), static_cast<Index>(chosen.size()));
  return data;
}

namespace {

constexpr std::array<std::array<int, 2>, 78> kKarateEdges{{
    {0, 1},   {0, 2},   {0, 3},   {0, 4},   {0, 5},   {0, 6},   {0, 7},   {0, 8},   {0, 10},  {0, 11},
    {0, 12},  {0, 13},  {0, 17},  {0, 19},  {0, 21},  {0, 31},  {1, 2},   {1, 3},   {1, 7},   {1, 13},
    {1, 17},  {1, 19},  {1, 21},  {1, 30},  {2, 3},   {2, 7},   {2, 8},   {2, 9},   {2, 13},  {2, 27},
    {2, 28},  {2, 32},  {3, 7},   {3, 12},  {3, 13},  {4, 6},   {4, 10},  {5, 6},   {5, 10},  {5, 16},
    {6, 16},  {8, 30},  {8, 32},  {8, 33},  {9, 33},  {13, 33}, {14, 32}, {14, 33}, {15, 32}, {15, 33},
    {18, 32}, {18, 33}, {19, 33}, {20, 32}, {20, 33}, {22, 32}, {22, 33}, {23, 25}, {23, 27}, {23, 29},
    {23, 32}, {23, 33}, {24, 25}, {24, 27}, {24, 31}, {25, 31}, {26, 29}, {26, 33}, {27, 33}, {28, 31},
    {28, 33}, {29, 32}, {29, 33}, {30, 32}, {30, 33}, {31, 32}, {31, 33}, {32, 33},
}};

// Four modularity communities.
constexpr std::array<int, 34> kKarateCommunity{
    0, 0, 0, 0, 1, 1, 1, 0, 2, 2, 1, 0, 0, 0, 2, 2, 1, 0, 2, 0, 2, 0, 2, 3, 3, 3, 2, 3, 3, 2, 2, 3, 2, 2,
};

constexpr int kKarateNodes = 34;
constexpr int kKarateBits = 6;
constexpr std::size_t kKarateTrainPerClass = 5;

}  // namespace

GraphDataset karate_club(std::uint64_t seed) {
  GraphDataset g;
  g.num_classes = 4;
  g.adjacency = Matrix::Zero(kKarateNodes, kKarateNodes);
  for (const auto& [a, b] : kKarateEdges) {
    g.adjacency(a, b) = 1.0;
    g.adjacency(b, a) = 1.0;
  }
  g.x.resize(kKarateNodes, kKarateBits);
  for (int node = 0; node < kKarateNodes; ++node) {
    for (int bit = 0; bit < kKarateBits; ++bit) {
      g.x(node, bit) = ((node >> (kKarateBits - 1 - bit)) & 1) ? 1.0 : -1.0;
    }
  }
  g.y.assign(kKarateCommunity.begin(), kKarateCommunity.end());

  for (int c = 0; c < g.num_classes; ++c) {
    std::vector<Index> members;
    for (int node = 0; node < kKarateNodes; ++node) {
      if (kKarateCommunity[static_cast<std::size_t>(node)] == c) members.push_back(node);
    }
    seeded_shuffle(members, mix_seed(seed, static_cast<std::uint64_t>(c)));
    g.train.insert(g.train.end(), members.begin(), members.begin() + kKarateTrainPerClass);
    g.test.insert(g.test.end(), members.begin() + kKarateTrainPerClass, members.end());
  }
  std::sort(g.train.begin(), g.train.end());
  std::sort(g.test.begin(), g.test.end());
  return g;
}

void write_csv(std::ostream& out, const TabularDataset& data) {
  std::vector<std::string> split(static_cast<std::size_t>(data.x.rows()), "");
  for (Index r : data.train) split[static_cast<std::size_t>(r)] = "train";
  for (Index r : data.test) split[static_cast<std::size_t>(r)] = "test";
  out << "row,split,label";
  for (Index c = 0; c < data.x.cols(); ++c) out << ",f" << c;
  out << '\n';
  for (Index r = 0; r < data.x.rows(); ++r) {
    out << r << ',' << split[static_cast<std::size_t>(r)] << ',' << data.y[static_cast<std::size_t>(r)];
    for (Index c = 0; c < data.x.cols(); ++c) out << ',' << data.x(r, c);
    out << '\n';
  }
}

void write_csv(std::ostream& out, const GraphDataset& data) {
  std::vector<std::string> split(static_cast<std::size_t>(data.x.rows()), "");
  for (Index r : data.train) split[static_cast<std::size_t>(r)] = "train";
  for (Index r : data.test) split[static_cast<std::size_t>(r)] = "test";
  out << "node,split,label,degree";
  for (Index c = 0; c < data.x.cols(); ++c) out << ",f" << c;
  out << '\n';
  for (Index r = 0; r < data.x.rows(); ++r) {
    out << r << ',' << split[static_cast<std::size_t>(r)] << ',' << data.y[static_cast<std::size_t>(r)] << ','
        << data.adjacency.row(r).sum();
    for (Index c = 0; c < data.x.cols(); ++c) out << ',' << data.x(r, c);
    out << '\n';
  }
}

}  // namespace qpsbgd
