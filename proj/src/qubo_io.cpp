#include "qpsbgd/qubo_io.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <utility>
#include <vector>

#include "qpsbgd/errors.hpp"

namespace qpsbgd {

namespace {

[[noreturn]] void fail(int line_no, const std::string& what) {
  throw ParseError("QUBO text line " + std::to_string(line_no) + ": " + what);
}

struct QuadEntry {
  long i, j;
  double value;
  int line_no;
};

struct LinEntry {
  long i;
  double value;
  int line_no;
};

}  // namespace

QuboProblem read_qubo_text(std::istream& in) {
  std::optional<long> n;
  std::vector<QuadEntry> quad;
  std::vector<LinEntry> lin;
  std::set<std::pair<long, long>> seen_quad;
  std::set<long> seen_lin;
  double offset = 0.0;
  bool seen_offset = false;

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "n") {
      long value = 0;
      if (n) fail(line_no, "duplicate 'n' line");
      if (!(ls >> value) || value < 1) fail(line_no, "expected positive integer after 'n'");
      n = value;
    } else if (tag == "q") {
      QuadEntry e{.i = 0, .j = 0, .value = 0.0, .line_no = line_no};
      if (!(ls >> e.i >> e.j >> e.value)) fail(line_no, "expected 'q <i> <j> <value>'");
      if (e.i > e.j) fail(line_no, "quadratic entries need i <= j");
      if (!seen_quad.insert({e.i, e.j}).second) fail(line_no, "duplicate quadratic entry");
      quad.push_back(e);
    } else if (tag == "l") {
      long i = 0;
      double value = 0.0;
      if (!(ls >> i >> value)) fail(line_no, "expected 'l <i> <value>'");
      if (!seen_lin.insert(i).second) fail(line_no, "duplicate linear entry");
      lin.push_back({i, value, line_no});
    } else if (tag == "offset") {
      if (seen_offset) fail(line_no, "duplicate 'offset' line");
      if (!(ls >> offset)) fail(line_no, "expected 'offset <value>'");
      seen_offset = true;
    } else {
      fail(line_no, "unknown record '" + tag + "'");
    }
    std::string trailing;
    if (ls >> trailing && trailing[0] != '#') fail(line_no, "trailing tokens");
  }
  if (!n) throw ParseError("QUBO text: missing 'n' line");

  Matrix q = Matrix::Zero(*n, *n);
  Vector s = Vector::Zero(*n);
  for (const auto& e : quad) {
    if (e.i < 0 || e.j >= *n) fail(e.line_no, "quadratic index out of range for n = " + std::to_string(*n));
    q(e.i, e.j) = e.value;
    q(e.j, e.i) = e.value;
  }
  for (const auto& e : lin) {
    if (e.i < 0 || e.i >= *n) fail(e.line_no, "linear index out of range for n = " + std::to_string(*n));
    s[e.i] = e.value;
  }
  return QuboProblem(std::move(q), std::move(s), offset);
}

QuboProblem read_qubo_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open QUBO file: " + path);
  return read_qubo_text(in);
}

void write_qubo_text(std::ostream& out, const QuboProblem& problem) {
  const auto n = static_cast<Eigen::Index>(problem.size());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "n " << n << '\n';
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      if (problem.quadratic()(i, j) != 0.0) out << "q " << i << ' ' << j << ' ' << problem.quadratic()(i, j) << '\n';
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (problem.linear()[i] != 0.0) out << "l " << i << ' ' << problem.linear()[i] << '\n';
  }
  if (problem.offset() != 0.0) out << "offset " << problem.offset() << '\n';
}

}  // namespace qpsbgd
