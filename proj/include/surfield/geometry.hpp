#pragma once

#include <array>
#include <memory>
#include <vector>

#include "surfield/grid_eval.hpp"
#include "surfield/kernel.hpp"
#include "surfield/lattice.hpp"
#include "surfield/manifold.hpp"
#include "surfield/parallel.hpp"

namespace surfield {

/// Where the metric comes from: sample covariances of an ensemble, or the deterministic
/// white-noise covariance on a data voxel set.
class GeometrySource {
 public:
  static GeometrySource white_noise(VoxelSetPtr data_domain);
  static GeometrySource ensemble(std::shared_ptr<const FieldEnsemble> fields);

  bool is_ensemble() const noexcept { return fields_ != nullptr; }
  const VoxelSet& domain() const noexcept { return *domain_; }
  const VoxelSetPtr& domain_ptr() const noexcept { return domain_; }
  const FieldEnsemble& fields() const { return *fields_; }

 private:
  VoxelSetPtr domain_;
  std::shared_ptr<const FieldEnsemble> fields_;
};

/// Christoffel symbols of the first kind, Gamma(k, d, e) = Gamma_{kde}; symmetric in k, d.
struct Christoffel {
  int dim = 1;
  std::array<double, kMaxDim * kMaxDim * kMaxDim> g{};

  double operator()(int k, int d, int e) const { return g[(k * kMaxDim + d) * kMaxDim + e]; }
  double& operator()(int k, int d, int e) { return g[(k * kMaxDim + d) * kMaxDim + e]; }
};

/// Inner products of the kernel jet at one point (white noise), or the matching sample
/// covariances of the SuRF jet (ensemble): S = <K,K>, a_d = <dK,K>, B_de = <d_dK, d_eK>,
/// C_kd = <d_kd K, K>, E_kde = <d_kd K, d_e K>.
struct JetInnerProducts {
  int dim = 1;
  double S = 0.0;
  Vec a;
  Mat B;
  Mat C;
  std::array<Mat, kMaxDim> E;  // E[k](d, e)
};

JetInnerProducts jet_inner_products(const GeometrySource& source, const GaussianKernel& kernel, const Vec& x,
                                    bool second_order);

Mat metric_from_inner_products(const JetInnerProducts& ip);
Christoffel christoffel_from_inner_products(const JetInnerProducts& ip);

/// Metric of the normalized SuRF at x.
Mat metric(const GeometrySource& source, const GaussianKernel& kernel, const Vec& x);
/// Christoffel symbols of the first kind of that metric at x.
Christoffel christoffel(const GeometrySource& source, const GaussianKernel& kernel, const Vec& x);

struct Frame {
  Vec U, V, N;
};

/// Metric-orthonormal frame for the plane spanned by axes k < l (0-based) in D = 3:
/// U along e_k, V in span(e_k, e_l), N proportional to Lambda^{-1} e_m.
Frame orthonormal_frame(const Mat& metric, int k, int l);

/// Opening angle contribution of an edge point with tangent axis k (0-based).
double theta_angle(const Mat& metric, int k, EdgeType type);

/// sqrt(det) with eigenvalues below 1e-12 clipped; `clipped` is set when clipping happened.
double sqrt_det_clipped(const Mat& m, bool* clipped = nullptr);

/// Metric at every point of a refined grid, stored as packed upper triangles.
class MetricField {
 public:
  enum class Source { ensemble_estimate, white_noise_theory, constant };

  MetricField(int dim, Source source, std::vector<double> packed);

  int dim() const noexcept { return dim_; }
  Source source() const noexcept { return source_; }
  std::size_t size() const noexcept { return packed_.size() / packed_size(dim_); }
  Mat at(std::size_t p) const;

  static std::size_t packed_size(int dim) { return static_cast<std::size_t>(dim * (dim + 1) / 2); }

 private:
  int dim_;
  Source source_;
  std::vector<double> packed_;
};

std::string to_string(MetricField::Source s);

/// Metric over a refined grid of `manifold`, evaluated from `source`.
MetricField metric_field(const GeometrySource& source, const GaussianKernel& kernel, const RefinedGrid& grid,
                         Parallelism par = {});
/// Metric field from jet moments (white-noise sums or ensemble co-moments) at grid points.
MetricField metric_field_from_moments(const JetMoments& moments, const RefinedGrid& grid);
MetricField constant_metric_field(const RefinedGrid& grid, const Mat& metric);

/// Christoffel symbols at selected grid points (direct summation).
std::vector<Christoffel> christoffel_field(const GeometrySource& source, const GaussianKernel& kernel,
                                           const RefinedGrid& grid, std::span<const std::size_t> points,
                                           Parallelism par = {});

}  // namespace surfield
