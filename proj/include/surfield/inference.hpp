#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "surfield/grid_eval.hpp"
#include "surfield/kernel.hpp"
#include "surfield/lkc.hpp"
#include "surfield/manifold.hpp"
#include "surfield/surf.hpp"

namespace surfield {

/// Marginal family of the field: Gaussian or Student t with nu degrees of freedom.
struct FieldType {
  enum class Kind { gaussian, student_t };
  Kind kind = Kind::gaussian;
  double nu = 0.0;

  static FieldType gaussian() { return {}; }
  static FieldType student_t(double nu);
  std::string name() const;
};

/// EC density rho_d(u), d = 0..3. rho_0 is the upper tail probability.
double ec_density(const FieldType& type, int d, double u);

/// Expected Euler characteristic sum_d L_d rho_d(u).
double expected_ec(const LkcVector& lkc, const FieldType& type, double u);

/// Largest u in [u_min, 50] with expected_ec(u) = alpha, where u_min is the largest u at
/// which the expected EC reaches 1 (or -10).
double threshold(const LkcVector& lkc, const FieldType& type, double alpha);

/// t statistic sqrt(N) mean / sd at each point of ensemble jet moments.
std::vector<double> t_values_from_moments(const JetMoments& moments);

/// t-field values at every point of a refined grid.
std::vector<double> t_field_on_grid(const SurfSpec& spec, const RefinedGrid& grid, Parallelism par = {});

/// Number of local maxima strictly above u among grid values; a point is a maximum when no
/// existing 3^D - 1 neighbour is larger, and connected equal-valued plateaus count once.
std::size_t count_local_maxima_above(const RefinedGrid& grid, std::span<const double> values, double u);

/// Indices of grid local maxima (plateaus represented by their first point), highest first.
std::vector<std::size_t> local_maxima(const RefinedGrid& grid, std::span<const double> values);

struct MaximizeOptions {
  std::size_t starts = 10;
  int max_iterations = 200;
  double gradient_tol = 1e-8;
  double step_tol = 1e-10;
  /// Converged maxima closer than this are the same maximum.
  double merge_distance = 1e-4;
};

struct MaximizeResult {
  Vec argmax;
  double value = 0.0;
  double grid_max = 0.0;
  /// Distinct maxima reached by the ascents, highest first.
  std::vector<Vec> maxima;
  std::vector<double> maxima_values;
};

/// Scans M^(r_scan), then runs projected quasi-Newton ascent of the t-field from the highest
/// grid local maxima.
MaximizeResult maximize_t_field(const SurfSpec& spec, const VoxelManifold& manifold, int r_scan,
                                MaximizeOptions options = {}, Parallelism par = {});

/// Same, reusing t-field values already computed on `grid`.
MaximizeResult maximize_t_field(const SurfSpec& spec, const VoxelManifold& manifold, const RefinedGrid& grid,
                                std::span<const double> grid_values, MaximizeOptions options = {});

/// Voxels v with K(x, v) != 0 (all voxels for an untruncated kernel).
std::vector<std::size_t> localization_support(const GaussianKernel& kernel, const VoxelSet& domain, const Vec& x);

struct NondegeneracyReport {
  std::size_t rank = 0;
  std::size_t required = 0;
  std::size_t support_size = 0;
  bool pass = false;
  std::vector<double> singular_values;
};

/// Numeric rank of the stacked (K, grad K, vech Hess K) rows over the support of K(x, .).
NondegeneracyReport nondegeneracy_check(const GaussianKernel& kernel, const VoxelSet& domain, const Vec& x);

}  // namespace surfield
