#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "surfield/kernel.hpp"
#include "surfield/lattice.hpp"
#include "surfield/parallel.hpp"

namespace surfield {

/// Rectilinear grid; point (i0, i1, i2) sits at (axes[0][i0], axes[1][i1], axes[2][i2]).
/// Axis 0 varies fastest in the dense linear order.
struct ProductGrid {
  int dim = 1;
  std::array<std::vector<double>, kMaxDim> axes;

  std::size_t extent(int d) const { return d < dim ? axes[d].size() : 1; }
  std::size_t size() const { return extent(0) * extent(1) * extent(2); }
  std::size_t linear(std::size_t i0, std::size_t i1, std::size_t i2) const {
    return i0 + extent(0) * (i1 + extent(1) * i2);
  }
  Vec point(std::size_t linear_index) const;
};

/// Kernel jet weights of every source voxel at one query point; entries outside the
/// kernel support are zero. g is voxel-major with D entries per voxel, h with D*D.
struct PointWeights {
  Order order = Order::value;
  int dim = 1;
  std::vector<double> k;
  std::vector<double> g;
  std::vector<double> h;
};

void kernel_weights(const VoxelSet& source, const GaussianKernel& kernel, const Vec& x, Order order,
                    PointWeights& out);

/// Per-point second-moment structure of the jet J = (X~, dX~/dx_1, ..., dX~/dx_D).
///
/// White-noise sums: gram = sum_v J_a(v) J_b(v) with J the kernel jet, mean empty.
/// Ensemble: mean over fields and gram = sum_i (J_a^i - mean_a)(J_b^i - mean_b).
struct JetMoments {
  int dim = 1;
  int width = 1;  // 1 (values only) or 1 + dim
  std::size_t n_points = 0;
  std::size_t n_fields = 0;  // 0 for white-noise sums
  std::vector<double> mean;
  std::vector<double> gram;

  const double* gram_at(std::size_t p) const { return gram.data() + p * width * width; }
  const double* mean_at(std::size_t p) const { return mean.data() + p * width; }
};

/// Smooths weights on a lattice-aligned voxel set onto a product grid with an untruncated
/// kernel, one axis at a time.
class SeparableEvaluator {
 public:
  SeparableEvaluator(const VoxelSet& source, const GaussianKernel& kernel, ProductGrid grid);

  /// True when the source is lattice aligned and the kernel is untruncated.
  static bool supports(const VoxelSet& source, const GaussianKernel& kernel);

  const ProductGrid& grid() const noexcept { return grid_; }

  /// Axis table ids: 0..2 select the kernel factor derivative k^(p); product(p, q) selects
  /// k^(p) k^(q).
  static constexpr int product(int p, int q) { return 3 + 3 * p + q; }

  /// Scatters per-voxel weights into the dense bounding box of the source lattice.
  std::vector<double> scatter(std::span<const double> per_voxel) const;

  /// Dense grid result of sum_v w(v) prod_d T_d(x_d, v_d) for each table combination.
  /// Combinations sharing leading axes share work.
  std::vector<std::vector<double>> contract(std::span<const double> box_weights,
                                            std::span<const std::array<int, kMaxDim>> combos) const;

 private:
  const VoxelSet& source_;
  ProductGrid grid_;
  int dim_;
  std::array<std::size_t, kMaxDim> n_{1, 1, 1};  // source box extent
  std::array<std::size_t, kMaxDim> m_{1, 1, 1};  // grid extent
  // tables_[d][id] is an m_d x n_d column-major matrix
  std::array<std::array<std::vector<double>, 12>, kMaxDim> tables_;
};

/// Derivative-order combos of the jet (K, dK/dx_1, ...) up to `order` (value or gradient).
std::vector<std::array<int, kMaxDim>> jet_combos(int dim, Order order);

/// White-noise jet sums at selected dense indices of a product grid (identity lattice covariance).
JetMoments white_noise_moments(const VoxelSet& source, const GaussianKernel& kernel, const ProductGrid& grid,
                               std::span<const std::size_t> wanted, Order order, Parallelism par = {});

/// Same at arbitrary points by direct summation.
JetMoments white_noise_moments(const VoxelSet& source, const GaussianKernel& kernel, std::span<const Vec> points,
                               Order order, Parallelism par = {});

/// Ensemble mean and co-moments of the SuRF jet at selected dense indices of a product grid.
JetMoments ensemble_moments(const FieldEnsemble& ensemble, const GaussianKernel& kernel, const ProductGrid& grid,
                            std::span<const std::size_t> wanted, Order order, Parallelism par = {});

/// Same at arbitrary points by direct summation.
JetMoments ensemble_moments(const FieldEnsemble& ensemble, const GaussianKernel& kernel,
                            std::span<const Vec> points, Order order, Parallelism par = {});

}  // namespace surfield
