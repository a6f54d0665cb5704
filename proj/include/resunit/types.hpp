#pragma once

#include <Eigen/Core>

namespace resunit {

/// Dense row-major real matrix. Samples are stored one per row.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;
using Index = Eigen::Index;

}  // namespace resunit
