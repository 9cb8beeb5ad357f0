#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "qpsbgd/datasets.hpp"
#include "qpsbgd/errors.hpp"

using namespace qpsbgd;
namespace fs = std::filesystem;

namespace {

std::string temp_file(const std::string& name, const std::string& contents) {
  const fs::path path = fs::temp_directory_path() / ("qpsbgd_" + name);
  std::ofstream(path, std::ios::binary) << contents;
  return path.string();
}

std::string be32(std::uint32_t v) {
  return {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8), static_cast<char>(v)};
}

}  // namespace

TEST(Blobs, BalancedSeparableAndSeeded) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto d = make_blobs(seed);
    ASSERT_EQ(d.x.rows(), 100);
    ASSERT_EQ(d.dim(), 3);
    EXPECT_EQ(std::count(d.y.begin(), d.y.end(), 1), 50);
    EXPECT_TRUE((d.x.col(2).array() == 1.0).all());
    EXPECT_TRUE(binary_separable(d.x, d.y, 0.1));
    EXPECT_EQ(d.train.size(), 100u);
  }
  EXPECT_EQ(make_blobs(3).x, make_blobs(3).x);
  EXPECT_NE(make_blobs(3).x, make_blobs(4).x);
}

TEST(Svmlight, ParsesSparseBinaryRows) {
  const auto path = temp_file("ok.svm", "+1 1:1 3:1\n-1 2:1\n\n");
  const auto d = read_svmlight(path, 4);
  ASSERT_EQ(d.x.rows(), 2);
  EXPECT_EQ(d.x.row(0), (Vector(4) << 1, -1, 1, -1).finished().transpose());
  EXPECT_EQ(d.y, (std::vector<int>{1, 0}));
}

TEST(Svmlight, ErrorsCarryPathOrLine) {
  try {
    read_svmlight(temp_file("bad.svm", "+1 1:1\n-1 9:1\n"), 4);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
  }
  EXPECT_THROW(read_svmlight(temp_file("bad2.svm", "+1 3-1\n"), 4), ParseError);
  EXPECT_THROW(read_svmlight(temp_file("bad3.svm", "yes 1:1\n"), 4), ParseError);
  try {
    read_svmlight("/nonexistent/a1a", 123);
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/a1a"), std::string::npos);
  }
}

TEST(Adult, LoadsBundledSplit) {
  const auto d = load_adult("data/adult/a1a", "data/adult/a1a.t");
  EXPECT_EQ(d.train.size(), 1605u);
  EXPECT_EQ(d.test.size(), 30956u);
  EXPECT_EQ(d.dim(), 123);
  EXPECT_TRUE((d.x.array().abs() == 1.0).all());
  const auto sub = load_adult("data/adult/a1a", "data/adult/a1a.t", 15, 2);
  EXPECT_EQ(sub.dim(), 15);
  EXPECT_EQ(sub.x, load_adult("data/adult/a1a", "data/adult/a1a.t", 15, 2).x);
  EXPECT_THROW(load_adult("data/adult/a1a", "data/adult/a1a.t", 0, 2), std::invalid_argument);
}

TEST(Idx, MagicAndTruncationChecks) {
  const auto images = temp_file("img.idx", be32(0x803) + be32(1) + be32(2) + be32(2) + std::string("\x01\x02\x03\x04", 4));
  const auto read = read_idx_images(images);
  EXPECT_EQ(read.count, 1u);
  EXPECT_EQ(read.pixels, (std::vector<std::uint8_t>{1, 2, 3, 4}));
  EXPECT_THROW(read_idx_images(temp_file("img2.idx", be32(0x801) + be32(0))), FormatError);
  EXPECT_THROW(read_idx_images(temp_file("img3.idx", be32(0x803) + be32(1) + be32(2) + be32(2) + "\x01")), FormatError);
  EXPECT_THROW(read_idx_labels(temp_file("lab.idx", be32(0x803) + be32(0))), FormatError);
  EXPECT_THROW(read_idx_labels("/nonexistent/labels"), IoError);
  const auto labels = read_idx_labels(temp_file("lab2.idx", be32(0x801) + be32(2) + std::string("\x07\x01", 2)));
  EXPECT_EQ(labels, (std::vector<int>{7, 1}));
}

TEST(LineFeatures, HalfPlaneVotes) {
  // A bright horizontal bar and one faint pixel above it.
  std::vector<std::uint8_t> image(7 * 7, 0);
  for (int c = 1; c < 6; ++c) image[5 * 7 + c] = 255;
  image[1 * 7 + 3] = 100;  // faint pixel above, not a keypoint
  const auto f = line_features(image, 7, 7);
  ASSERT_EQ(f.size(), 16u);
  // Line 0 is horizontal with normal (0, 1) pointing down the rows: keypoints below.
  EXPECT_EQ(f[0], 1);
  // Line 8 is vertical with normal (-1, 0): the row is symmetric, a tie counts as +1.
  EXPECT_EQ(f[8], 1);
  // Line 12 has normal angle 5pi/4, pointing up-left: three of five keypoints lie behind it.
  EXPECT_EQ(f[12], -1);
  EXPECT_EQ(f[4], 1);
  EXPECT_EQ(line_features(std::vector<std::uint8_t>(9, 0), 3, 3), std::vector<int>(16, 1));
  EXPECT_THROW(line_features(image, 6, 7), std::invalid_argument);
}

TEST(Mnist, PairSplitAndLabels) {
  IdxImages images;
  images.count = 40;
  images.rows = images.cols = 4;
  images.pixels.assign(40 * 16, 0);
  std::vector<int> labels;
  for (int i = 0; i < 40; ++i) {
    labels.push_back(i % 4);
    images.pixels[static_cast<std::size_t>(i * 16 + i % 16)] = 200;
  }
  const auto d = mnist_line_features(images, labels, {1, 3}, 0, 12, 5);
  EXPECT_EQ(d.train.size(), 12u);
  EXPECT_EQ(d.test.size(), 5u);
  EXPECT_EQ(d.dim(), 16);
  EXPECT_THROW(mnist_line_features(images, labels, {1, 1}, 0), std::invalid_argument);
  EXPECT_THROW(mnist_line_features(images, labels, {1, 3}, 0, 20), std::invalid_argument);
}

TEST(Mnist, BundledIdxFiles) {
  const auto images = read_idx_images("data/mnist/images-idx3-ubyte");
  const auto labels = read_idx_labels("data/mnist/labels-idx1-ubyte");
  EXPECT_EQ(images.count, labels.size());
  EXPECT_EQ(images.rows, 28u);
  const auto d = mnist_line_features(images, labels, {1, 7}, 0);
  EXPECT_EQ(d.train.size(), 500u);
  EXPECT_EQ(d.test.size(), 500u);
}

TEST(Karate, GraphFeaturesAndSplit) {
  const auto g = karate_club(0);
  EXPECT_EQ(g.adjacency.rows(), 34);
  EXPECT_DOUBLE_EQ(g.adjacency.sum(), 2.0 * 78);
  EXPECT_TRUE(g.adjacency.isApprox(g.adjacency.transpose()));
  EXPECT_DOUBLE_EQ(g.adjacency.diagonal().cwiseAbs().sum(), 0.0);
  EXPECT_EQ(g.x.row(5), (Vector(6) << -1, -1, -1, 1, -1, 1).finished().transpose());
  EXPECT_EQ(g.train.size(), 20u);
  EXPECT_EQ(g.test.size(), 14u);
  for (int c = 0; c < 4; ++c) {
    EXPECT_EQ(std::count_if(g.train.begin(), g.train.end(), [&](Index i) { return g.y[static_cast<std::size_t>(i)] == c; }), 5);
  }
  EXPECT_EQ(karate_club(3).train, karate_club(3).train);
  EXPECT_NE(karate_club(3).train, karate_club(4).train);
}

TEST(Csv, DumpHasHeaderAndOneRowPerSample) {
  std::ostringstream out;
  write_csv(out, make_blobs(0));
  const std::string text = out.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "row,split,label,f0,f1,f2");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 101);
  std::ostringstream graph;
  write_csv(graph, karate_club(0));
  EXPECT_EQ(graph.str().substr(0, 22), "node,split,label,degre");
}

TEST(LineFeatures, PointSymmetricImageTiesEveryLine) {
  // A plus sign and two diagonal dots, symmetric about pixel (3, 3).
  std::vector<std::uint8_t> image(7 * 7, 0);
  for (int k = 1; k < 6; ++k) image[3 * 7 + k] = image[k * 7 + 3] = 255;
  image[1 * 7 + 2] = image[5 * 7 + 4] = 180;
  const auto f = line_features(image, 7, 7);
  EXPECT_EQ(f, std::vector<int>(16, 1));
}
