#pragma once

#include <Eigen/Core>
#include <span>

namespace spherelab {

using Index = Eigen::Index;

/// One input point per row; rows are contiguous so a point is a span.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

using Point = std::span<const double>;

inline Point row_of(const PointMatrix& m, Index i) {
  return {m.row(i).data(), static_cast<std::size_t>(m.cols())};
}

inline Point as_point(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace spherelab
