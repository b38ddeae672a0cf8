#pragma once

#include <Eigen/Dense>

namespace jplay {

/// d x N matrix, one sample per column.
using DataMatrix = Eigen::MatrixXd;

/// L x N one-hot label matrix: entries in {0,1}, each column sums to 1.
using LabelMatrix = Eigen::MatrixXd;

}  // namespace jplay
