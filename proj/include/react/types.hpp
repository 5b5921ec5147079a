#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>

namespace react {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;  // column-major; batched activations are (features x batch)

// Time-by-feature grids are row-major so that row t is contiguous and the
// flattened layout used as network input is simply `data()[t * d + j]`.
using Grid = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using BitGrid = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using BitVector = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, 1>;

// Problem dimensions shared by every model component.
struct Dims {
  std::size_t d_s = 0;  // onboarding context features
  std::size_t d = 0;    // temporal features per visit
  std::size_t T = 0;    // horizon
  std::size_t C = 0;    // classes

  std::size_t grid_size() const { return T * d; }
  bool operator==(const Dims&) const = default;
};

}  // namespace react
