#pragma once

#include <cstddef>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace pfspin {

using Index = std::ptrdiff_t;
using Vector = Eigen::VectorXd;

/// Compressed-row storage; columns are sorted within each row.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

}  // namespace pfspin
