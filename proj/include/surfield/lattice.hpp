#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "surfield/types.hpp"

namespace surfield {

/// Integer embedding of a voxel set whose coordinates lie on origin + spacing * Z^D.
struct LatticeEmbedding {
  Vec origin;
  Index3 extent{1, 1, 1};          // number of lattice sites per axis in the bounding box
  std::vector<Index3> index;       // per-voxel lattice index
  std::vector<std::int32_t> slot;  // dense bounding-box lookup, -1 where empty

  std::size_t linear(const Index3& idx) const {
    return static_cast<std::size_t>(idx[0] + extent[0] * (idx[1] + extent[1] * idx[2]));
  }
  bool in_bounds(const Index3& idx) const;
  /// Voxel number at a lattice index, if occupied. Out-of-box indices are empty.
  std::optional<std::size_t> find(const Index3& idx) const;
  bool occupied(const Index3& idx) const { return find(idx).has_value(); }
  std::size_t box_size() const {
    return static_cast<std::size_t>(extent[0] * extent[1] * extent[2]);
  }
};

/// Finite set of distinct points in R^D (D = 1..3) with per-axis spacing.
class VoxelSet {
 public:
  /// coords is row-major, size() * dim values. Spacing defaults to the minimum positive
  /// coordinate gap per axis (1 on axes with a single distinct coordinate).
  VoxelSet(int dim, std::vector<double> coords, std::optional<Vec> spacing = std::nullopt);

  /// Voxels at integer lattice indices with unit spacing.
  static VoxelSet from_indices(int dim, std::span<const Index3> indices);

  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return coords_.size() / static_cast<std::size_t>(dim_); }
  double coord(std::size_t i, int d) const { return coords_[i * dim_ + d]; }
  Vec point(std::size_t i) const;
  std::span<const double> coords() const noexcept { return coords_; }
  const Vec& spacing() const noexcept { return spacing_; }

  /// Integer embedding, or nullptr when coordinates are not lattice aligned.
  const LatticeEmbedding* lattice() const noexcept { return lattice_ ? &*lattice_ : nullptr; }

  /// Per-axis minimum positive coordinate gap recomputed from the coordinates.
  static Vec compute_spacing(int dim, std::span<const double> coords);

 private:
  int dim_;
  std::vector<double> coords_;
  Vec spacing_;
  std::optional<LatticeEmbedding> lattice_;
};

using VoxelSetPtr = std::shared_ptr<const VoxelSet>;

/// One real value per voxel.
class LatticeField {
 public:
  LatticeField(VoxelSetPtr domain, std::vector<double> values);

  const VoxelSet& domain() const noexcept { return *domain_; }
  const VoxelSetPtr& domain_ptr() const noexcept { return domain_; }
  std::span<const double> values() const noexcept { return values_; }

 private:
  VoxelSetPtr domain_;
  std::vector<double> values_;
};

/// N lattice fields over one voxel set, stored voxel-major: value(v, i) = data[v * N + i].
class FieldEnsemble {
 public:
  FieldEnsemble(VoxelSetPtr domain, std::size_t n_fields, std::vector<double> voxel_major,
                std::uint64_t seed = 0, std::optional<std::vector<double>> signal = std::nullopt);
  static FieldEnsemble from_fields(const std::vector<LatticeField>& fields, std::uint64_t seed = 0);

  const VoxelSet& domain() const noexcept { return *domain_; }
  const VoxelSetPtr& domain_ptr() const noexcept { return domain_; }
  std::size_t n_fields() const noexcept { return n_fields_; }
  std::size_t n_voxels() const noexcept { return domain_->size(); }
  double value(std::size_t voxel, std::size_t field) const { return data_[voxel * n_fields_ + field]; }
  std::span<const double> voxel_major() const noexcept { return data_; }
  std::vector<double> field(std::size_t i) const;
  std::uint64_t seed() const noexcept { return seed_; }
  const std::optional<std::vector<double>>& signal() const noexcept { return signal_; }

  /// Copy with every value multiplied by c (and signal, if present).
  FieldEnsemble scaled(double c) const;

 private:
  VoxelSetPtr domain_;
  std::size_t n_fields_;
  std::vector<double> data_;
  std::uint64_t seed_;
  std::optional<std::vector<double>> signal_;
};

/// (master seed, stream) pair; the derived generator seed is a pure function of both.
struct RngSpec {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  std::uint64_t derived_seed() const noexcept;
};

/// Simulation domain: the voxel set the data lives on and the (possibly smaller) voxel set
/// whose voxel manifold is the analysis domain.
struct DomainPreset {
  std::string name;
  bool stationary = false;
  double expansion = 0.0;  // a of the expanded stationary lattice
  VoxelSetPtr data_domain;
  VoxelSetPtr manifold_domain;
};

inline constexpr std::string_view kPresetNames[] = {"stat1d",    "stat2d",    "stat3d",
                                                    "nonstat1d", "nonstat2d", "nonstat3d"};

/// Expansion a = sqrt(2) f / sqrt(log 2) used by the stationary presets.
double stationary_expansion(double fwhm);

/// Builds a named simulation domain. `expansion` overrides the FWHM-derived a (stationary only).
DomainPreset make_domain_preset(std::string_view name, double fwhm,
                                std::optional<double> expansion = std::nullopt);

/// Draws n fields of i.i.d. N(0,1) noise per voxel plus the optional mean.
FieldEnsemble sample_ensemble(VoxelSetPtr domain, std::size_t n, const RngSpec& rng,
                              std::optional<std::vector<double>> signal = std::nullopt);

// ---- file formats -------------------------------------------------------------------

/// Writes the binary SRF1 format (always with a field-count block).
void write_srf1(const std::string& path, const FieldEnsemble& ensemble);
FieldEnsemble read_srf1(const std::string& path);
std::vector<unsigned char> encode_srf1(const FieldEnsemble& ensemble);
FieldEnsemble decode_srf1(std::span<const unsigned char> bytes);

/// CSV with header x1..xD,value (single field) or x1..xD,field_0..field_{N-1}.
void write_csv(const std::string& path, const FieldEnsemble& ensemble);
FieldEnsemble read_csv(const std::string& path);

}  // namespace surfield
