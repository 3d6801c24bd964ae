#pragma once

#include <Eigen/Dense>

namespace fk {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

}  // namespace fk
