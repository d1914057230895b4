#include "surfield/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "surfield/error.hpp"

namespace surfield {

namespace {

// Occupancy of lattice index j; outside the bounding box counts as empty.
bool occupied(const LatticeEmbedding& lat, std::int64_t j0, std::int64_t j1, std::int64_t j2) {
  return lat.occupied(Index3{j0, j1, j2});
}

// Occupancy pattern of the 2^k voxels around a point. `lo[d]`/`two[d]` give the first candidate
// index and whether the axis has two candidates. Bit (b0 + 2 b1 + 4 b2) is set when the
// voxel lo + b is occupied (b_d = 0 on single-candidate axes).
unsigned incident_pattern(const LatticeEmbedding& lat, const Index3& lo, const std::array<bool, kMaxDim>& two) {
  unsigned pattern = 0;
  for (unsigned bits = 0; bits < 8; ++bits) {
    bool valid = true;
    Index3 j = lo;
    for (int d = 0; d < kMaxDim; ++d) {
      const bool b = (bits >> d) & 1u;
      if (b && !two[d]) valid = false;
      j[d] += b ? 1 : 0;
    }
    if (valid && occupied(lat, j[0], j[1], j[2])) pattern |= 1u << bits;
  }
  return pattern;
}

// Axes along which the pattern is not mirror symmetric: the normal axes of the stratum.
unsigned normal_axes(unsigned pattern, const std::array<bool, kMaxDim>& two) {
  unsigned mask = 0;
  for (int d = 0; d < kMaxDim; ++d) {
    if (!two[d]) continue;
    for (unsigned bits = 0; bits < 8; ++bits) {
      const bool here = (pattern >> bits) & 1u;
      const bool mirror = (pattern >> (bits ^ (1u << d))) & 1u;
      if (here != mirror) {
        mask |= 1u << d;
        break;
      }
    }
  }
  return mask;
}

int popcount(unsigned x) { return __builtin_popcount(x); }

}  // namespace

std::string to_string(EdgeType t) {
  switch (t) {
    case EdgeType::convex:
      return "convex";
    case EdgeType::double_convex:
      return "double-convex";
    case EdgeType::concave:
      return "concave";
  }
  return "unknown";
}

std::optional<EdgeType> classify_edge_pattern(unsigned pattern) {
  switch (popcount(pattern & 0xFu)) {
    case 1:
      return EdgeType::convex;
    case 2:
      // diagonal pairs share only the edge
      if ((pattern & 0xFu) == 0b1001u || (pattern & 0xFu) == 0b0110u) return EdgeType::double_convex;
      return std::nullopt;
    case 3:
      return EdgeType::concave;
    default:
      return std::nullopt;
  }
}

VoxelManifold::VoxelManifold(VoxelSetPtr domain) : domain_(std::move(domain)) {
  if (!domain_) throw InvalidArgument("VoxelManifold: null domain");
  if (!domain_->lattice()) {
    throw InvalidArgument("VoxelManifold: voxel coordinates must lie on a regular lattice");
  }
}

std::pair<Vec, Vec> VoxelManifold::box(std::size_t v) const {
  const Vec c = domain_->point(v);
  const Vec h = 0.5 * spacing();
  return {c - h, c + h};
}

std::optional<std::size_t> VoxelManifold::containing_box(const Vec& x, double tol) const {
  const int D = dim();
  if (x.size() != D) throw InvalidArgument("VoxelManifold: point dimension mismatch");
  const LatticeEmbedding& lat = lattice();
  std::array<std::int64_t, kMaxDim> lo{0, 0, 0}, hi{0, 0, 0};
  for (int d = 0; d < D; ++d) {
    const double t = (x[d] - lat.origin[d]) / spacing()[d];
    const double slack = tol / spacing()[d];
    lo[d] = static_cast<std::int64_t>(std::ceil(t - 0.5 - slack));
    hi[d] = static_cast<std::int64_t>(std::floor(t + 0.5 + slack));
    if (lo[d] > hi[d]) return std::nullopt;
  }
  std::optional<std::size_t> best;
  for (std::int64_t k = lo[2]; k <= hi[2]; ++k)
    for (std::int64_t j = lo[1]; j <= hi[1]; ++j)
      for (std::int64_t i = lo[0]; i <= hi[0]; ++i) {
        if (auto v = lat.find(Index3{i, j, k})) {
          if (!best || *v < *best) best = v;
        }
      }
  return best;
}

Vec RefinedGrid::point(std::size_t p) const {
  Vec x(dim_);
  for (int d = 0; d < dim_; ++d) {
    x[d] = lattice_origin_[d] + static_cast<double>(points_[p][d] - centre_offset_) * step_[d];
  }
  return x;
}

std::vector<Vec> RefinedGrid::points() const {
  std::vector<Vec> out;
  out.reserve(size());
  for (std::size_t p = 0; p < size(); ++p) out.push_back(point(p));
  return out;
}

ProductGrid RefinedGrid::product_grid() const {
  ProductGrid g;
  g.dim = dim_;
  for (int d = 0; d < dim_; ++d) {
    g.axes[d].resize(static_cast<std::size_t>(extent_[d]));
    for (std::int64_t i = 0; i < extent_[d]; ++i) {
      g.axes[d][i] = lattice_origin_[d] + static_cast<double>(i - centre_offset_) * step_[d];
    }
  }
  return g;
}

std::optional<std::size_t> RefinedGrid::find(const Index3& g) const {
  for (int d = 0; d < kMaxDim; ++d) {
    if (g[d] < 0 || g[d] >= extent_[d]) return std::nullopt;
  }
  const auto lin = static_cast<std::size_t>(g[0] + extent_[0] * (g[1] + extent_[1] * g[2]));
  const auto s = slot_[lin];
  if (s < 0) return std::nullopt;
  return static_cast<std::size_t>(s);
}

std::size_t RefinedGrid::voxel_centre(std::size_t v) const {
  if (v >= centres_.size()) throw InvalidArgument("RefinedGrid: voxel index out of range");
  return centres_[v];
}

RefinedGrid refined_grid(const VoxelManifold& manifold, int r) {
  if (r < 0 || (r > 0 && r % 2 == 0)) {
    throw InvalidArgument("refined_grid: added resolution must be 0 or an odd positive integer, got " +
                          std::to_string(r));
  }
  const int D = manifold.dim();
  const LatticeEmbedding& lat = manifold.lattice();
  const Vec& delta = manifold.spacing();
  const std::size_t nv = manifold.domain().size();

  RefinedGrid grid;
  grid.dim_ = D;
  grid.r_ = r;
  grid.lattice_origin_ = lat.origin;
  grid.period_ = r + 1;
  const std::int64_t P = grid.period_;
  grid.centre_offset_ = r == 0 ? 0 : P / 2;
  grid.step_ = delta / static_cast<double>(P);
  for (int d = 0; d < D; ++d) grid.extent_[d] = r == 0 ? lat.extent[d] : lat.extent[d] * P + 1;
  const std::size_t dense_size =
      static_cast<std::size_t>(grid.extent_[0] * grid.extent_[1] * grid.extent_[2]);
  auto linear = [&](const Index3& g) {
    return static_cast<std::size_t>(g[0] + grid.extent_[0] * (g[1] + grid.extent_[1] * g[2]));
  };

  // per-box offsets; r = 0 has the single centre offset
  const std::int64_t span = r == 0 ? 0 : P;
  std::vector<Index3> offsets;
  for (std::int64_t c = 0; c <= (D > 2 ? span : 0); ++c)
    for (std::int64_t b = 0; b <= (D > 1 ? span : 0); ++b)
      for (std::int64_t a = 0; a <= span; ++a) offsets.push_back({a, b, c});

  std::vector<double> volume(dense_size, 0.0);
  std::vector<char> mark(dense_size, 0);
  double cell = 1.0;
  for (int d = 0; d < D; ++d) cell *= r == 0 ? delta[d] : grid.step_[d];
  for (std::size_t v = 0; v < nv; ++v) {
    const Index3& j = lat.index[v];
    for (const auto& o : offsets) {
      Index3 g{0, 0, 0};
      double w = cell;
      for (int d = 0; d < D; ++d) {
        g[d] = j[d] * (r == 0 ? 1 : P) + o[d];
        if (r > 0 && (o[d] == 0 || o[d] == P)) w *= 0.5;
      }
      const auto lin = linear(g);
      mark[lin] = 1;
      volume[lin] += w;
    }
  }

  grid.slot_.assign(dense_size, -1);
  for (std::size_t lin = 0; lin < dense_size; ++lin) {
    if (!mark[lin]) continue;
    if (grid.points_.size() >= static_cast<std::size_t>(INT32_MAX)) {
      throw InvalidArgument("refined_grid: grid too large");
    }
    grid.slot_[lin] = static_cast<std::int32_t>(grid.points_.size());
    Index3 g{0, 0, 0};
    std::size_t rest = lin;
    for (int d = 0; d < kMaxDim; ++d) {
      g[d] = static_cast<std::int64_t>(rest % static_cast<std::size_t>(grid.extent_[d]));
      rest /= static_cast<std::size_t>(grid.extent_[d]);
    }
    grid.points_.push_back(g);
    grid.dense_.push_back(lin);
    grid.volume_weights_.push_back(volume[lin]);
  }
  volume.clear();
  volume.shrink_to_fit();

  const std::size_t np = grid.points_.size();
  grid.tags_.resize(np);
  for (std::size_t v = 0; v < nv; ++v) {
    Index3 g{0, 0, 0};
    for (int d = 0; d < D; ++d) g[d] = lat.index[v][d] * (r == 0 ? 1 : P) + grid.centre_offset_;
    grid.centres_.push_back(static_cast<std::size_t>(grid.slot_[linear(g)]));
  }
  if (r == 0) return grid;

  for (std::size_t p = 0; p < np; ++p) {
    const Index3& g = grid.points_[p];
    Index3 lo{0, 0, 0};
    std::array<bool, kMaxDim> two{false, false, false};
    for (int d = 0; d < D; ++d) {
      if (g[d] % P == 0) {
        two[d] = true;
        lo[d] = g[d] / P - 1;
      } else {
        lo[d] = g[d] / P;
      }
    }
    const unsigned pattern = incident_pattern(lat, lo, two);
    const unsigned mask = normal_axes(pattern, two);
    PointTag& tag = grid.tags_[p];
    tag.normal_mask = static_cast<std::uint8_t>(mask);
    tag.codim = static_cast<std::uint8_t>(popcount(mask));
    if (tag.codim == 1) {
      int n = __builtin_ctz(mask);
      // the low side (bit n clear) is occupied somewhere iff the face opens upward
      bool low_occupied = false;
      for (unsigned bits = 0; bits < 8; ++bits) {
        if (((pattern >> bits) & 1u) && !((bits >> n) & 1u)) low_occupied = true;
      }
      tag.outward[n] = low_occupied ? 1 : -1;
    }
    if (D == 3 && tag.codim == 2) {
      const int a = __builtin_ctz(mask);
      const int b = 31 - __builtin_clz(mask);
      unsigned sub = 0;
      for (unsigned q = 0; q < 4; ++q) {
        const unsigned bits = ((q & 1u) << a) | (((q >> 1) & 1u) << b);
        if ((pattern >> bits) & 1u) sub |= 1u << q;
      }
      tag.edge_type = classify_edge_pattern(sub);
    }
  }

  // exterior unit faces, trapezoid weights within each face
  std::vector<double> face_weight(np * D * 2, 0.0);
  for (std::size_t v = 0; v < nv; ++v) {
    const Index3& j = lat.index[v];
    for (int n = 0; n < D; ++n) {
      for (int side = 0; side < 2; ++side) {
        Index3 nb = j;
        nb[n] += side == 0 ? -1 : 1;
        if (lat.occupied(nb)) continue;
        for (const auto& o : offsets) {
          if (o[n] != 0) continue;
          Index3 g{0, 0, 0};
          double w = 1.0;
          for (int d = 0; d < D; ++d) {
            if (d == n) {
              g[d] = j[d] * P + (side == 0 ? 0 : P);
              continue;
            }
            g[d] = j[d] * P + o[d];
            w *= grid.step_[d];
            if (o[d] == 0 || o[d] == P) w *= 0.5;
          }
          face_weight[(static_cast<std::size_t>(grid.slot_[linear(g)]) * D + n) * 2 + side] += w;
        }
      }
    }
  }
  for (std::size_t p = 0; p < np; ++p)
    for (int n = 0; n < D; ++n)
      for (int side = 0; side < 2; ++side) {
        const double w = face_weight[(p * D + n) * 2 + side];
        if (w > 0.0) grid.faces_.push_back({p, n, side == 0 ? -1 : 1, w});
      }

  if (D == 3) {
    std::map<std::tuple<std::size_t, int, int>, double> edge_weight;
    for (int k = 0; k < 3; ++k) {
      const int a = k == 0 ? 1 : 0;
      const int b = k == 2 ? 1 : 2;
      for (std::int64_t jk = 0; jk < lat.extent[k]; ++jk)
        for (std::int64_t cb = 0; cb <= lat.extent[b]; ++cb)
          for (std::int64_t ca = 0; ca <= lat.extent[a]; ++ca) {
            unsigned pattern = 0;
            for (unsigned q = 0; q < 4; ++q) {
              Index3 j{0, 0, 0};
              j[k] = jk;
              j[a] = ca - 1 + static_cast<std::int64_t>(q & 1u);
              j[b] = cb - 1 + static_cast<std::int64_t>((q >> 1) & 1u);
              if (lat.occupied(j)) pattern |= 1u << q;
            }
            const auto type = classify_edge_pattern(pattern);
            if (!type) continue;
            for (std::int64_t o = 0; o <= P; ++o) {
              Index3 g{0, 0, 0};
              g[k] = jk * P + o;
              g[a] = ca * P;
              g[b] = cb * P;
              const double w = grid.step_[k] * ((o == 0 || o == P) ? 0.5 : 1.0);
              const auto p = static_cast<std::size_t>(grid.slot_[linear(g)]);
              edge_weight[{p, k, static_cast<int>(*type)}] += w;
            }
          }
    }
    for (const auto& [key, w] : edge_weight) {
      grid.edges_.push_back({std::get<0>(key), std::get<1>(key), static_cast<EdgeType>(std::get<2>(key)), w});
    }
  }
  return grid;
}

std::size_t StratumCensus::edge_total(std::optional<EdgeType> type) const {
  std::size_t n = 0;
  for (const auto& e : edges) {
    if (!type || e.type == *type) n += e.count;
  }
  return n;
}

StratumCensus classify_boundary(const VoxelManifold& manifold) {
  const int D = manifold.dim();
  const LatticeEmbedding& lat = manifold.lattice();
  StratumCensus census;
  census.dim = D;
  for (std::size_t v = 0; v < manifold.domain().size(); ++v) {
    const Index3& j = lat.index[v];
    for (int n = 0; n < D; ++n)
      for (int side = -1; side <= 1; side += 2) {
        Index3 nb = j;
        nb[n] += side;
        if (!lat.occupied(nb)) ++census.faces[n];
      }
  }
  if (D == 3) {
    std::map<std::pair<int, int>, std::size_t> counts;
    for (int k = 0; k < 3; ++k) {
      const int a = k == 0 ? 1 : 0;
      const int b = k == 2 ? 1 : 2;
      for (std::int64_t jk = 0; jk < lat.extent[k]; ++jk)
        for (std::int64_t cb = 0; cb <= lat.extent[b]; ++cb)
          for (std::int64_t ca = 0; ca <= lat.extent[a]; ++ca) {
            unsigned pattern = 0;
            for (unsigned q = 0; q < 4; ++q) {
              Index3 j{0, 0, 0};
              j[k] = jk;
              j[a] = ca - 1 + static_cast<std::int64_t>(q & 1u);
              j[b] = cb - 1 + static_cast<std::int64_t>((q >> 1) & 1u);
              if (lat.occupied(j)) pattern |= 1u << q;
            }
            if (auto type = classify_edge_pattern(pattern)) ++counts[{k, static_cast<int>(*type)}];
          }
    }
    for (const auto& [key, n] : counts) census.edges.push_back({key.first, static_cast<EdgeType>(key.second), n});
  }
  // corners of the box lattice whose incident pattern breaks every mirror symmetry
  const std::int64_t c1 = D > 1 ? lat.extent[1] : 0;
  const std::int64_t c2 = D > 2 ? lat.extent[2] : 0;
  std::array<bool, kMaxDim> two{false, false, false};
  for (int d = 0; d < D; ++d) two[d] = true;
  const unsigned all = (1u << D) - 1;
  for (std::int64_t k = 0; k <= c2; ++k)
    for (std::int64_t j = 0; j <= c1; ++j)
      for (std::int64_t i = 0; i <= lat.extent[0]; ++i) {
        const Index3 lo{i - 1, D > 1 ? j - 1 : 0, D > 2 ? k - 1 : 0};
        const unsigned pattern = incident_pattern(lat, lo, two);
        if (pattern == 0) continue;
        if (normal_axes(pattern, two) == all) ++census.vertices;
      }
  return census;
}

std::int64_t euler_characteristic(const VoxelManifold& manifold) {
  const int D = manifold.dim();
  const LatticeEmbedding& lat = manifold.lattice();
  Index3 ext{1, 1, 1};
  for (int d = 0; d < D; ++d) ext[d] = 2 * lat.extent[d] + 1;
  std::vector<char> cell(static_cast<std::size_t>(ext[0] * ext[1] * ext[2]), 0);
  const std::int64_t e1 = D > 1 ? 2 : 0;
  const std::int64_t e2 = D > 2 ? 2 : 0;
  for (std::size_t v = 0; v < manifold.domain().size(); ++v) {
    const Index3& j = lat.index[v];
    for (std::int64_t c = 0; c <= e2; ++c)
      for (std::int64_t b = 0; b <= e1; ++b)
        for (std::int64_t a = 0; a <= 2; ++a) {
          const std::int64_t x = 2 * j[0] + a;
          const std::int64_t y = D > 1 ? 2 * j[1] + b : 0;
          const std::int64_t z = D > 2 ? 2 * j[2] + c : 0;
          cell[static_cast<std::size_t>(x + ext[0] * (y + ext[1] * z))] = 1;
        }
  }
  std::int64_t chi = 0;
  for (std::int64_t z = 0; z < ext[2]; ++z)
    for (std::int64_t y = 0; y < ext[1]; ++y)
      for (std::int64_t x = 0; x < ext[0]; ++x) {
        if (!cell[static_cast<std::size_t>(x + ext[0] * (y + ext[1] * z))]) continue;
        // cell dimension = number of odd doubled coordinates (box interiors along that axis)
        int dim = (x & 1) + (D > 1 ? (y & 1) : 0) + (D > 2 ? (z & 1) : 0);
        chi += (dim % 2 == 0) ? 1 : -1;
      }
  return chi;
}

}  // namespace surfield
