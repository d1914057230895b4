#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "surfield/geometry.hpp"
#include "surfield/manifold.hpp"

namespace surfield {

enum class LkcSource { estimate, white_noise_theory, stationary_closed_form, constant_metric };

std::string to_string(LkcSource s);

/// L_0 ... L_D; entries above D are zero.
struct LkcVector {
  int dim = 1;
  std::array<double, 4> L{0.0, 0.0, 0.0, 0.0};
  int r = 0;  // added resolution (0 for closed forms)
  LkcSource source = LkcSource::estimate;
  /// D = 3 only: L_1 keeps just the edge integral (plus the face term when requested).
  bool l1_locally_stationary = false;
  bool l1_face_term = false;
  /// Grid points whose metric needed eigenvalue clipping.
  std::size_t clipped_points = 0;

  double operator[](int d) const { return L[d]; }
};

struct LkcOptions {
  /// Adds the Christoffel face integral to the D = 3 L_1 estimate.
  bool l1_face_term = false;
};

/// Riemann sums of a metric field over the strata of a refined grid. L_0 is the Euler
/// characteristic of the manifold.
LkcVector lkc_from_metric_field(const VoxelManifold& manifold, const RefinedGrid& grid, const MetricField& metric);

/// Face integral of the D = 3 L_1 formula, (1/2pi) sum over faces of
/// Lambda(nabla_U U + nabla_V V, N) sqrt(det Lambda^I), given Christoffel symbols at each
/// face sample of `grid` (in face_samples() order).
double l1_face_term(const RefinedGrid& grid, const MetricField& metric, std::span<const Christoffel> gamma);

LkcVector lkc_compute(const GeometrySource& source, const GaussianKernel& kernel, const VoxelManifold& manifold,
                      int r, LkcOptions options = {}, Parallelism par = {});

/// Stationary limit (4 log 2)^{d/2} mu_d(box) / f^d for a box with the given side lengths.
LkcVector lkc_stationary_closed_form(std::span<const double> sides, double fwhm);

}  // namespace surfield
