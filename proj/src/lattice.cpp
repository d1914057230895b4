#include "surfield/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "surfield/error.hpp"

namespace surfield {

namespace {

constexpr std::size_t kMaxDenseBox = std::size_t{1} << 28;

std::optional<LatticeEmbedding> embed(int dim, std::span<const double> coords, const Vec& spacing) {
  const std::size_t n = coords.size() / dim;
  LatticeEmbedding e;
  e.origin = Vec::Zero(dim);
  for (int d = 0; d < dim; ++d) {
    double lo = coords[d];
    for (std::size_t i = 0; i < n; ++i) lo = std::min(lo, coords[i * dim + d]);
    e.origin[d] = lo;
  }
  e.index.resize(n);
  Index3 hi{0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    Index3 idx{0, 0, 0};
    for (int d = 0; d < dim; ++d) {
      const double c = coords[i * dim + d];
      const double t = (c - e.origin[d]) / spacing[d];
      const auto k = static_cast<std::int64_t>(std::llround(t));
      const double back = e.origin[d] + static_cast<double>(k) * spacing[d];
      if (std::abs(back - c) > 1e-9 * std::max({1.0, std::abs(c), spacing[d]})) return std::nullopt;
      idx[d] = k;
      hi[d] = std::max(hi[d], k);
    }
    e.index[i] = idx;
  }
  double box = 1.0;
  for (int d = 0; d < dim; ++d) {
    e.extent[d] = hi[d] + 1;
    box *= static_cast<double>(e.extent[d]);
  }
  if (box > static_cast<double>(kMaxDenseBox)) return std::nullopt;
  e.slot.assign(e.box_size(), -1);
  for (std::size_t i = 0; i < n; ++i) {
    auto& s = e.slot[e.linear(e.index[i])];
    if (s >= 0) throw InvalidArgument("VoxelSet: duplicate voxel coordinates");
    s = static_cast<std::int32_t>(i);
  }
  return e;
}

void check_distinct(int dim, std::span<const double> coords) {
  const std::size_t n = coords.size() / dim;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto less = [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(coords.begin() + a * dim, coords.begin() + (a + 1) * dim,
                                        coords.begin() + b * dim, coords.begin() + (b + 1) * dim);
  };
  std::sort(order.begin(), order.end(), less);
  for (std::size_t k = 1; k < n; ++k) {
    if (!less(order[k - 1], order[k])) throw InvalidArgument("VoxelSet: duplicate voxel coordinates");
  }
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

bool LatticeEmbedding::in_bounds(const Index3& idx) const {
  for (int d = 0; d < kMaxDim; ++d) {
    if (idx[d] < 0 || idx[d] >= extent[d]) return false;
  }
  return true;
}

std::optional<std::size_t> LatticeEmbedding::find(const Index3& idx) const {
  if (!in_bounds(idx)) return std::nullopt;
  const auto s = slot[linear(idx)];
  if (s < 0) return std::nullopt;
  return static_cast<std::size_t>(s);
}

Vec VoxelSet::compute_spacing(int dim, std::span<const double> coords) {
  const std::size_t n = coords.size() / dim;
  Vec delta(dim);
  std::vector<double> axis(n);
  for (int d = 0; d < dim; ++d) {
    for (std::size_t i = 0; i < n; ++i) axis[i] = coords[i * dim + d];
    std::sort(axis.begin(), axis.end());
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < n; ++i) {
      const double g = axis[i] - axis[i - 1];
      if (g > 0.0) gap = std::min(gap, g);
    }
    delta[d] = std::isfinite(gap) ? gap : 1.0;
  }
  return delta;
}

VoxelSet::VoxelSet(int dim, std::vector<double> coords, std::optional<Vec> spacing)
    : dim_(dim), coords_(std::move(coords)) {
  if (dim_ < 1 || dim_ > kMaxDim) throw InvalidArgument("VoxelSet: dimension must be 1, 2 or 3");
  if (coords_.empty() || coords_.size() % dim_ != 0) {
    throw InvalidArgument("VoxelSet: coordinate list must be a non-empty multiple of the dimension");
  }
  for (double c : coords_) {
    if (!std::isfinite(c)) throw InvalidArgument("VoxelSet: non-finite coordinate");
  }
  if (spacing) {
    if (spacing->size() != dim_) throw InvalidArgument("VoxelSet: spacing has wrong dimension");
    for (int d = 0; d < dim_; ++d) {
      if (!((*spacing)[d] > 0.0)) throw InvalidArgument("VoxelSet: spacing must be positive");
    }
    spacing_ = *spacing;
  } else {
    spacing_ = compute_spacing(dim_, coords_);
  }
  lattice_ = embed(dim_, coords_, spacing_);
  if (!lattice_) check_distinct(dim_, coords_);
}

VoxelSet VoxelSet::from_indices(int dim, std::span<const Index3> indices) {
  std::vector<double> coords;
  coords.reserve(indices.size() * dim);
  for (const auto& idx : indices) {
    for (int d = 0; d < dim; ++d) coords.push_back(static_cast<double>(idx[d]));
  }
  return VoxelSet(dim, std::move(coords), Vec::Ones(dim));
}

Vec VoxelSet::point(std::size_t i) const {
  Vec p(dim_);
  for (int d = 0; d < dim_; ++d) p[d] = coords_[i * dim_ + d];
  return p;
}

LatticeField::LatticeField(VoxelSetPtr domain, std::vector<double> values)
    : domain_(std::move(domain)), values_(std::move(values)) {
  if (!domain_) throw InvalidArgument("LatticeField: null domain");
  if (values_.size() != domain_->size()) {
    throw InvalidArgument("LatticeField: value count does not match voxel count");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw InvalidArgument("LatticeField: non-finite value");
  }
}

FieldEnsemble::FieldEnsemble(VoxelSetPtr domain, std::size_t n_fields, std::vector<double> voxel_major,
                             std::uint64_t seed, std::optional<std::vector<double>> signal)
    : domain_(std::move(domain)),
      n_fields_(n_fields),
      data_(std::move(voxel_major)),
      seed_(seed),
      signal_(std::move(signal)) {
  if (!domain_) throw InvalidArgument("FieldEnsemble: null domain");
  if (n_fields_ == 0) throw InvalidArgument("FieldEnsemble: needs at least one field");
  if (data_.size() != n_fields_ * domain_->size()) {
    throw InvalidArgument("FieldEnsemble: value count does not match voxels x fields");
  }
  if (signal_ && signal_->size() != domain_->size()) {
    throw InvalidArgument("FieldEnsemble: signal length does not match voxel count");
  }
  for (double v : data_) {
    if (!std::isfinite(v)) throw InvalidArgument("FieldEnsemble: non-finite value");
  }
}

FieldEnsemble FieldEnsemble::from_fields(const std::vector<LatticeField>& fields, std::uint64_t seed) {
  if (fields.empty()) throw InvalidArgument("FieldEnsemble: needs at least one field");
  const auto& dom = fields.front().domain_ptr();
  const std::size_t n = dom->size();
  const std::size_t N = fields.size();
  std::vector<double> data(n * N);
  for (std::size_t i = 0; i < N; ++i) {
    if (fields[i].domain_ptr() != dom) {
      throw InvalidArgument("FieldEnsemble: all fields must share one VoxelSet");
    }
    const auto vals = fields[i].values();
    for (std::size_t v = 0; v < n; ++v) data[v * N + i] = vals[v];
  }
  return FieldEnsemble(dom, N, std::move(data), seed);
}

std::vector<double> FieldEnsemble::field(std::size_t i) const {
  if (i >= n_fields_) throw InvalidArgument("FieldEnsemble: field index out of range");
  std::vector<double> out(n_voxels());
  for (std::size_t v = 0; v < out.size(); ++v) out[v] = data_[v * n_fields_ + i];
  return out;
}

FieldEnsemble FieldEnsemble::scaled(double c) const {
  std::vector<double> data = data_;
  for (double& x : data) x *= c;
  std::optional<std::vector<double>> sig = signal_;
  if (sig) {
    for (double& x : *sig) x *= c;
  }
  return FieldEnsemble(domain_, n_fields_, std::move(data), seed_, std::move(sig));
}

std::uint64_t RngSpec::derived_seed() const noexcept {
  return splitmix64(splitmix64(seed) ^ (stream * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
}

double stationary_expansion(double fwhm) { return std::sqrt(2.0) * fwhm / std::sqrt(std::log(2.0)); }

namespace {

VoxelSetPtr make_box(int dim, std::int64_t lo, std::int64_t hi) {
  std::vector<Index3> idx;
  const std::int64_t n = hi - lo + 1;
  const std::int64_t n1 = dim > 1 ? n : 1;
  const std::int64_t n2 = dim > 2 ? n : 1;
  for (std::int64_t k = 0; k < n2; ++k)
    for (std::int64_t j = 0; j < n1; ++j)
      for (std::int64_t i = 0; i < n; ++i) {
        idx.push_back({lo + i, dim > 1 ? lo + j : 0, dim > 2 ? lo + k : 0});
      }
  return std::make_shared<const VoxelSet>(VoxelSet::from_indices(dim, idx));
}

VoxelSetPtr make_frame(int dim) {
  auto on_rim = [](std::int64_t c) { return c == 1 || c == 2 || c == 19 || c == 20; };
  std::vector<Index3> idx;
  const std::int64_t n2 = dim > 2 ? 20 : 1;
  for (std::int64_t k = 1; k <= n2; ++k)
    for (std::int64_t j = 1; j <= 20; ++j)
      for (std::int64_t i = 1; i <= 20; ++i) {
        const bool rim = on_rim(i) || on_rim(j) || (dim > 2 && on_rim(k));
        if (rim) idx.push_back({i, j, dim > 2 ? k : 0});
      }
  return std::make_shared<const VoxelSet>(VoxelSet::from_indices(dim, idx));
}

VoxelSetPtr make_gapped_line() {
  std::vector<std::int64_t> excluded = {2, 4, 8, 9, 11, 15, 20, 21, 22, 60, 62, 64, 65, 98, 99, 100};
  for (std::int64_t k = 40; k <= 45; ++k) excluded.push_back(k);
  std::vector<Index3> idx;
  for (std::int64_t i = 1; i <= 100; ++i) {
    if (std::find(excluded.begin(), excluded.end(), i) == excluded.end()) idx.push_back({i, 0, 0});
  }
  return std::make_shared<const VoxelSet>(VoxelSet::from_indices(1, idx));
}

}  // namespace

DomainPreset make_domain_preset(std::string_view name, double fwhm, std::optional<double> expansion) {
  DomainPreset p;
  p.name = std::string(name);
  if (name == "stat1d" || name == "stat2d" || name == "stat3d") {
    const int dim = name[4] - '0';
    const std::int64_t length = dim == 1 ? 100 : 20;
    double a = 0.0;
    if (expansion) {
      a = *expansion;
    } else {
      if (!(fwhm > 0.0)) throw InvalidArgument("make_domain_preset: stationary presets need fwhm > 0");
      a = stationary_expansion(fwhm);
    }
    if (a < 0.0) throw InvalidArgument("make_domain_preset: expansion must be non-negative");
    p.stationary = true;
    p.expansion = a;
    const auto lo = static_cast<std::int64_t>(std::ceil(1.0 - a - 1e-12));
    const auto hi = static_cast<std::int64_t>(std::floor(static_cast<double>(length) + a + 1e-12));
    p.data_domain = make_box(dim, lo, hi);
    p.manifold_domain = make_box(dim, 1, length);
    return p;
  }
  if (name == "nonstat1d") {
    p.data_domain = make_gapped_line();
  } else if (name == "nonstat2d") {
    p.data_domain = make_frame(2);
  } else if (name == "nonstat3d") {
    p.data_domain = make_frame(3);
  } else {
    throw InvalidArgument("make_domain_preset: unknown preset '" + std::string(name) + "'");
  }
  p.manifold_domain = p.data_domain;
  return p;
}

FieldEnsemble sample_ensemble(VoxelSetPtr domain, std::size_t n, const RngSpec& rng,
                              std::optional<std::vector<double>> signal) {
  if (!domain) throw InvalidArgument("sample_ensemble: null domain");
  if (n < 1) throw InvalidArgument("sample_ensemble: n must be at least 1");
  const std::size_t nv = domain->size();
  if (signal && signal->size() != nv) {
    throw InvalidArgument("sample_ensemble: signal length does not match the domain");
  }
  std::mt19937_64 gen(rng.derived_seed());
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> data(nv * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t v = 0; v < nv; ++v) {
      data[v * n + i] = normal(gen) + (signal ? (*signal)[v] : 0.0);
    }
  }
  return FieldEnsemble(std::move(domain), n, std::move(data), rng.seed, std::move(signal));
}

}  // namespace surfield
