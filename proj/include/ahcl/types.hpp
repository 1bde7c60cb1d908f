#pragma once

#include <Eigen/Dense>
#include <vector>

namespace ahcl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Labels = std::vector<int>;

bool all_finite(const Matrix& m);

}  // namespace ahcl
