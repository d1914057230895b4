#pragma once

#include <array>
#include <cstdint>

#include <Eigen/Core>

namespace surfield {

/// Largest supported domain dimension.
inline constexpr int kMaxDim = 3;

/// Small dense vector / matrix with inline storage (no heap allocation for D <= 3).
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

/// Integer lattice index; unused trailing axes are zero.
using Index3 = std::array<std::int64_t, kMaxDim>;

/// Requested derivative order of a field or kernel evaluation.
enum class Order { value = 0, gradient = 1, hessian = 2 };

}  // namespace surfield
