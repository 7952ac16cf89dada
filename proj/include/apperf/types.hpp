#pragma once

#include <Eigen/Dense>
#include <vector>

namespace apperf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Binary label vector; entries are 0 or 1.
using Labels = std::vector<int>;

}  // namespace apperf
