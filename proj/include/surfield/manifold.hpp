#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "surfield/grid_eval.hpp"
#include "surfield/lattice.hpp"

namespace surfield {

enum class EdgeType : std::uint8_t { convex, double_convex, concave };

std::string to_string(EdgeType t);

/// Union of the closed boxes prod_d [v_d - delta_d/2, v_d + delta_d/2] over a lattice-aligned voxel set.
class VoxelManifold {
 public:
  explicit VoxelManifold(VoxelSetPtr domain);

  int dim() const noexcept { return domain_->dim(); }
  const VoxelSet& domain() const noexcept { return *domain_; }
  const VoxelSetPtr& domain_ptr() const noexcept { return domain_; }
  const LatticeEmbedding& lattice() const noexcept { return *domain_->lattice(); }
  const Vec& spacing() const noexcept { return domain_->spacing(); }

  /// Lower and upper corner of the box of voxel v.
  std::pair<Vec, Vec> box(std::size_t v) const;
  /// A voxel whose closed box contains x (within tol), preferring the lowest voxel number.
  std::optional<std::size_t> containing_box(const Vec& x, double tol = 1e-12) const;
  bool contains(const Vec& x, double tol = 1e-12) const { return containing_box(x, tol).has_value(); }

 private:
  VoxelSetPtr domain_;
};

/// Position of a grid point in the boundary stratification. `normal_mask` holds the axes
/// along which the manifold ends at the point; codimension = number of set bits.
struct PointTag {
  std::uint8_t codim = 0;
  std::uint8_t normal_mask = 0;
  std::array<std::int8_t, kMaxDim> outward{0, 0, 0};  // face points: +1/-1 toward the empty side
  std::optional<EdgeType> edge_type;                 // D = 3 edge points

  bool interior() const noexcept { return codim == 0; }
};

/// Weighted sample of a boundary face: the point lies in an exterior unit face with the given
/// normal axis and outward direction (+1/-1); `weight` is its trapezoid share of the face area.
struct FaceSample {
  std::size_t point;
  int normal_axis;
  int outward;
  double weight;
};

/// Weighted sample of an exterior edge segment in D = 3 with tangent axis `axis`.
struct EdgeSample {
  std::size_t point;
  int axis;
  EdgeType type;
  double weight;
};

/// Points of the refined grid M^(r): per box (r+2)^D points with step delta/(r+1), merged over
/// boxes. r = 0 gives the voxel centres only.
class RefinedGrid {
 public:
  int dim() const noexcept { return dim_; }
  int r() const noexcept { return r_; }
  std::size_t size() const noexcept { return points_.size(); }
  const std::vector<Index3>& indices() const noexcept { return points_; }
  const Index3& index(std::size_t p) const { return points_[p]; }
  Vec point(std::size_t p) const;
  std::vector<Vec> points() const;
  const PointTag& tag(std::size_t p) const { return tags_[p]; }
  const std::vector<PointTag>& tags() const noexcept { return tags_; }

  /// Trapezoid volume weights (sum = volume of the manifold).
  const std::vector<double>& volume_weights() const noexcept { return volume_weights_; }
  const std::vector<FaceSample>& face_samples() const noexcept { return faces_; }
  const std::vector<EdgeSample>& edge_samples() const noexcept { return edges_; }

  /// Rectilinear hull of the grid and the position of each point in it.
  ProductGrid product_grid() const;
  std::size_t dense_index(std::size_t p) const { return dense_[p]; }
  const std::vector<std::size_t>& dense_indices() const noexcept { return dense_; }

  std::optional<std::size_t> find(const Index3& g) const;
  const Index3& extent() const noexcept { return extent_; }
  /// Grid point at the centre of voxel v.
  std::size_t voxel_centre(std::size_t v) const;

 private:
  friend RefinedGrid refined_grid(const VoxelManifold& manifold, int r);

  int dim_ = 1;
  int r_ = 1;
  Vec lattice_origin_;
  Vec step_;
  std::int64_t centre_offset_ = 0;  // fine index of a voxel centre within its box
  std::int64_t period_ = 1;         // fine steps per voxel
  Index3 extent_{1, 1, 1};
  std::vector<Index3> points_;
  std::vector<std::size_t> dense_;
  std::vector<std::int32_t> slot_;
  std::vector<PointTag> tags_;
  std::vector<std::size_t> centres_;
  std::vector<double> volume_weights_;
  std::vector<FaceSample> faces_;
  std::vector<EdgeSample> edges_;
};

/// Builds M^(r). r must be 0 or odd.
RefinedGrid refined_grid(const VoxelManifold& manifold, int r);

struct EdgeCount {
  int axis;
  EdgeType type;
  std::size_t count;
};

/// Counts of exterior unit faces per normal axis, unit edge segments by tangent axis and type
/// (D = 3), and vertices (0-dimensional strata).
struct StratumCensus {
  int dim = 1;
  std::array<std::size_t, kMaxDim> faces{0, 0, 0};
  std::vector<EdgeCount> edges;
  std::size_t vertices = 0;

  std::size_t edge_total(std::optional<EdgeType> type = std::nullopt) const;
};

StratumCensus classify_boundary(const VoxelManifold& manifold);

/// Alternating cell count of the closed cubical complex.
std::int64_t euler_characteristic(const VoxelManifold& manifold);

/// Classification of a 2x2 occupancy pattern around an edge; nullopt when the segment is not
/// an edge of the manifold. Bits: 1 = (0,0), 2 = (1,0), 4 = (0,1), 8 = (1,1).
std::optional<EdgeType> classify_edge_pattern(unsigned pattern);

}  // namespace surfield
