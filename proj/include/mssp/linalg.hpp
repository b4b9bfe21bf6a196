#pragma once

#include <Eigen/Dense>
#include <limits>

namespace mssp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace mssp
