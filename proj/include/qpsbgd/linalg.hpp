#pragma once

#include <Eigen/Dense>

namespace qpsbgd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

}  // namespace qpsbgd
