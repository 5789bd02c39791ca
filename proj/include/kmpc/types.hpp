#pragma once

#include <Eigen/Core>

namespace kmpc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

}  // namespace kmpc
