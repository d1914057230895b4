#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "surfield/kernel.hpp"
#include "surfield/lattice.hpp"
#include "surfield/parallel.hpp"

namespace surfield {

/// Lattice covariance c(u, v) between voxel numbers u and v of the domain.
using LatticeCovariance = std::function<double(std::size_t, std::size_t)>;

/// An ensemble smoothed with a kernel, optionally normalized to unit variance.
struct SurfSpec {
  std::shared_ptr<const FieldEnsemble> ensemble;
  GaussianKernel kernel;
  bool normalized = false;
  /// Empty means identity covariance.
  LatticeCovariance lattice_covariance;

  SurfSpec(std::shared_ptr<const FieldEnsemble> e, GaussianKernel k, bool normalize = false,
           LatticeCovariance cov = {});
};

/// Columnar evaluation results in input point order. gradients holds D values per point,
/// hessians D*D (row-major) per point; both empty when not requested.
struct SurfValues {
  Order order = Order::value;
  int dim = 1;
  std::vector<double> values;
  std::vector<double> gradients;
  std::vector<double> hessians;

  std::size_t size() const noexcept { return values.size(); }
  Vec gradient(std::size_t p) const;
  Mat hessian(std::size_t p) const;
};

/// X~_i(x) = sum_v K(x, v) X_i(v) and its exact derivatives at each point.
SurfValues surf_eval(const SurfSpec& spec, std::span<const Vec> points, Order order, std::size_t field,
                     Parallelism par = {});

/// Cov(X~(x), X~(y)) = sum_u sum_v K(x, u) K(y, v) c(u, v).
double surf_covariance(const GaussianKernel& kernel, const VoxelSet& domain, const LatticeCovariance& cov,
                       const Vec& x, const Vec& y);

/// Squared kernel norm ||K_x||^2 with its gradient and Hessian in x (up to `order`).
struct KernelNorm {
  double value = 0.0;
  Vec gradient;
  Mat hessian;
};
KernelNorm kernel_norm_squared(const GaussianKernel& kernel, const VoxelSet& domain, const LatticeCovariance& cov,
                               const Vec& x, Order order);

/// One-sample t statistic sqrt(N) mean / sd of the N SuRF values (sd with N - 1), with
/// exact gradient for Order::gradient.
SurfValues t_field(const SurfSpec& spec, std::span<const Vec> points, Order order, Parallelism par = {});

}  // namespace surfield
