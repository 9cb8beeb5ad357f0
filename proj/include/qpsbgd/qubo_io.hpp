#pragma once

#include <istream>
#include <ostream>
#include <string>

#include "qpsbgd/qubo.hpp"

namespace qpsbgd {

// Line-oriented QUBO text format, 0-based indices:
//   n <int>
//   q <i> <j> <value>     matrix entry Q[i][j] = Q[j][i], requires i <= j
//   l <i> <value>         linear coefficient s[i]
//   offset <value>
// Blank lines and lines starting with '#' are ignored. Each (i, j) pair and
// each linear index may appear at most once.
QuboProblem read_qubo_text(std::istream& in);
QuboProblem read_qubo_file(const std::string& path);
void write_qubo_text(std::ostream& out, const QuboProblem& problem);

}  // namespace qpsbgd
