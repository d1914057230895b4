#include "surfield/grid_eval.hpp"

#include <cmath>
#include <map>

#include <Eigen/Core>

#include "surfield/error.hpp"

namespace surfield {

namespace {

using MatMap = Eigen::Map<Eigen::MatrixXd>;
using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;

// Derivative order of jet component a along axis d: component 0 is the value, component
// a >= 1 the derivative along axis a - 1.
int jet_order(int a, int d) { return (a >= 1 && a - 1 == d) ? 1 : 0; }

void welford_update(double* mean, double* gram, const double* y, int width, std::size_t count) {
  double delta[1 + kMaxDim];
  for (int a = 0; a < width; ++a) {
    delta[a] = y[a] - mean[a];
    mean[a] += delta[a] / static_cast<double>(count);
  }
  for (int a = 0; a < width; ++a) {
    for (int b = 0; b < width; ++b) gram[a * width + b] += delta[a] * (y[b] - mean[b]);
  }
}

int jet_width(int dim, Order order) {
  if (order == Order::hessian) throw InvalidArgument("jet moments: only value or gradient order supported");
  return order == Order::value ? 1 : 1 + dim;
}

}  // namespace

Vec ProductGrid::point(std::size_t linear_index) const {
  Vec p(dim);
  for (int d = 0; d < dim; ++d) {
    p[d] = axes[d][linear_index % extent(d)];
    linear_index /= extent(d);
  }
  return p;
}

void kernel_weights(const VoxelSet& source, const GaussianKernel& kernel, const Vec& x, Order order,
                    PointWeights& out) {
  const int D = source.dim();
  if (kernel.dim() != D || x.size() != D) throw InvalidArgument("kernel_weights: dimension mismatch");
  const std::size_t n = source.size();
  out.order = order;
  out.dim = D;
  out.k.assign(n, 0.0);
  out.g.assign(order == Order::value ? 0 : n * D, 0.0);
  out.h.assign(order == Order::hessian ? n * D * D : 0, 0.0);
  const double rho2 = kernel.truncation() ? *kernel.truncation() * *kernel.truncation() : 0.0;

  const LatticeEmbedding* lat = source.lattice();
  if (!lat) {
    for (std::size_t v = 0; v < n; ++v) {
      const auto j = kernel.jet(x, source.point(v), order);
      out.k[v] = j.value;
      if (order == Order::value) continue;
      for (int d = 0; d < D; ++d) out.g[v * D + d] = j.gradient[d];
      if (order != Order::hessian) continue;
      for (int d = 0; d < D; ++d)
        for (int e = 0; e < D; ++e) out.h[v * D * D + d * D + e] = j.hessian(d, e);
    }
    return;
  }

  // per-axis factor tables over the lattice bounding box
  thread_local std::array<std::vector<double>, kMaxDim> k0, k1, k2, tt;
  const Vec& delta = source.spacing();
  for (int d = 0; d < D; ++d) {
    const auto m = static_cast<std::size_t>(lat->extent[d]);
    k0[d].resize(m);
    k1[d].resize(m);
    k2[d].resize(m);
    tt[d].resize(m);
    const double c = kernel.rate(d);
    for (std::size_t j = 0; j < m; ++j) {
      const double t = x[d] - (lat->origin[d] + static_cast<double>(j) * delta[d]);
      const double e = std::exp(-c * t * t);
      tt[d][j] = t;
      k0[d][j] = e;
      k1[d][j] = -2.0 * c * t * e;
      k2[d][j] = (4.0 * c * c * t * t - 2.0 * c) * e;
    }
  }
  for (std::size_t v = 0; v < n; ++v) {
    const Index3& idx = lat->index[v];
    if (rho2 > 0.0) {
      double r2 = 0.0;
      for (int d = 0; d < D; ++d) r2 += tt[d][idx[d]] * tt[d][idx[d]];
      if (r2 > rho2) continue;
    }
    double f0[kMaxDim], f1[kMaxDim], f2[kMaxDim];
    for (int d = 0; d < D; ++d) {
      f0[d] = k0[d][idx[d]];
      f1[d] = k1[d][idx[d]];
      f2[d] = k2[d][idx[d]];
    }
    double val = 1.0;
    for (int d = 0; d < D; ++d) val *= f0[d];
    out.k[v] = val;
    if (order == Order::value) continue;
    for (int d = 0; d < D; ++d) {
      double p = f1[d];
      for (int e = 0; e < D; ++e)
        if (e != d) p *= f0[e];
      out.g[v * D + d] = p;
    }
    if (order != Order::hessian) continue;
    for (int d = 0; d < D; ++d) {
      for (int e = 0; e < D; ++e) {
        double p = 1.0;
        for (int a = 0; a < D; ++a) {
          if (d == e) {
            p *= a == d ? f2[a] : f0[a];
          } else {
            p *= (a == d || a == e) ? f1[a] : f0[a];
          }
        }
        out.h[v * D * D + d * D + e] = p;
      }
    }
  }
}

bool SeparableEvaluator::supports(const VoxelSet& source, const GaussianKernel& kernel) {
  return source.lattice() != nullptr && !kernel.truncation() && kernel.dim() == source.dim();
}

SeparableEvaluator::SeparableEvaluator(const VoxelSet& source, const GaussianKernel& kernel, ProductGrid grid)
    : source_(source), grid_(std::move(grid)), dim_(source.dim()) {
  if (!supports(source, kernel)) {
    throw InvalidArgument("SeparableEvaluator: needs a lattice-aligned source and an untruncated kernel");
  }
  if (grid_.dim != dim_) throw InvalidArgument("SeparableEvaluator: grid dimension mismatch");
  const LatticeEmbedding& lat = *source.lattice();
  for (int d = 0; d < kMaxDim; ++d) {
    if (d >= dim_) {
      for (auto& t : tables_[d]) t.assign(1, 1.0);
      continue;
    }
    n_[d] = static_cast<std::size_t>(lat.extent[d]);
    m_[d] = grid_.axes[d].size();
    if (m_[d] == 0) throw InvalidArgument("SeparableEvaluator: empty grid axis");
    std::array<std::vector<double>, 3> base;
    for (auto& b : base) b.resize(m_[d] * n_[d]);
    for (std::size_t j = 0; j < n_[d]; ++j) {
      const double v = lat.origin[d] + static_cast<double>(j) * source.spacing()[d];
      for (std::size_t i = 0; i < m_[d]; ++i) {
        const double t = grid_.axes[d][i] - v;
        for (int p = 0; p < 3; ++p) base[p][i + m_[d] * j] = kernel.factor(d, t, p);
      }
    }
    for (int p = 0; p < 3; ++p) {
      tables_[d][p] = base[p];
      for (int q = 0; q < 3; ++q) {
        auto& t = tables_[d][product(p, q)];
        t.resize(m_[d] * n_[d]);
        for (std::size_t e = 0; e < t.size(); ++e) t[e] = base[p][e] * base[q][e];
      }
    }
  }
}

std::vector<double> SeparableEvaluator::scatter(std::span<const double> per_voxel) const {
  const LatticeEmbedding& lat = *source_.lattice();
  if (per_voxel.size() != source_.size()) throw InvalidArgument("scatter: weight count mismatch");
  std::vector<double> box(lat.box_size(), 0.0);
  for (std::size_t v = 0; v < per_voxel.size(); ++v) box[lat.linear(lat.index[v])] = per_voxel[v];
  return box;
}

std::vector<std::vector<double>> SeparableEvaluator::contract(
    std::span<const double> box_weights, std::span<const std::array<int, kMaxDim>> combos) const {
  const auto [n0, n1, n2] = n_;
  const auto [m0, m1, m2] = m_;
  if (box_weights.size() != n0 * n1 * n2) throw InvalidArgument("contract: box weight size mismatch");
  auto table = [&](int d, int id) {
    if (id < 0 || id >= 12) throw InvalidArgument("contract: bad table id");
    return ConstMatMap(tables_[d][id].data(), static_cast<Eigen::Index>(m_[d]), static_cast<Eigen::Index>(n_[d]));
  };
  const ConstMatMap W(box_weights.data(), static_cast<Eigen::Index>(n0), static_cast<Eigen::Index>(n1 * n2));

  std::map<int, std::vector<double>> stage1;
  std::map<int, std::vector<double>> stage2;
  std::vector<std::vector<double>> out;
  out.reserve(combos.size());
  for (const auto& c : combos) {
    auto it1 = stage1.find(c[0]);
    if (it1 == stage1.end()) {
      std::vector<double> y(m0 * n1 * n2);
      MatMap Y(y.data(), static_cast<Eigen::Index>(m0), static_cast<Eigen::Index>(n1 * n2));
      Y.noalias() = table(0, c[0]) * W;
      it1 = stage1.emplace(c[0], std::move(y)).first;
    }
    const int key2 = c[0] * 16 + c[1];
    auto it2 = stage2.find(key2);
    if (it2 == stage2.end()) {
      std::vector<double> y(m0 * m1 * n2);
      const auto T1 = table(1, c[1]);
      for (std::size_t j2 = 0; j2 < n2; ++j2) {
        const ConstMatMap A(it1->second.data() + j2 * m0 * n1, static_cast<Eigen::Index>(m0),
                            static_cast<Eigen::Index>(n1));
        MatMap B(y.data() + j2 * m0 * m1, static_cast<Eigen::Index>(m0), static_cast<Eigen::Index>(m1));
        B.noalias() = A * T1.transpose();
      }
      it2 = stage2.emplace(key2, std::move(y)).first;
    }
    std::vector<double> y(m0 * m1 * m2);
    const ConstMatMap A(it2->second.data(), static_cast<Eigen::Index>(m0 * m1), static_cast<Eigen::Index>(n2));
    MatMap B(y.data(), static_cast<Eigen::Index>(m0 * m1), static_cast<Eigen::Index>(m2));
    B.noalias() = A * table(2, c[2]).transpose();
    out.push_back(std::move(y));
  }
  return out;
}

std::vector<std::array<int, kMaxDim>> jet_combos(int dim, Order order) {
  const int width = jet_width(dim, order);
  std::vector<std::array<int, kMaxDim>> combos;
  for (int a = 0; a < width; ++a) {
    std::array<int, kMaxDim> c{0, 0, 0};
    for (int d = 0; d < dim; ++d) c[d] = jet_order(a, d);
    combos.push_back(c);
  }
  return combos;
}

JetMoments white_noise_moments(const VoxelSet& source, const GaussianKernel& kernel, const ProductGrid& grid,
                               std::span<const std::size_t> wanted, Order order, Parallelism) {
  const int D = source.dim();
  const int width = jet_width(D, order);
  SeparableEvaluator ev(source, kernel, grid);
  std::vector<std::array<int, kMaxDim>> combos;
  std::vector<std::pair<int, int>> pairs;
  for (int a = 0; a < width; ++a) {
    for (int b = a; b < width; ++b) {
      std::array<int, kMaxDim> c{0, 0, 0};
      for (int d = 0; d < D; ++d) c[d] = SeparableEvaluator::product(jet_order(a, d), jet_order(b, d));
      combos.push_back(c);
      pairs.emplace_back(a, b);
    }
  }
  const std::vector<double> ones(source.size(), 1.0);
  const auto sums = ev.contract(ev.scatter(ones), combos);
  JetMoments m;
  m.dim = D;
  m.width = width;
  m.n_points = wanted.size();
  m.gram.resize(wanted.size() * width * width);
  for (std::size_t p = 0; p < wanted.size(); ++p) {
    if (wanted[p] >= grid.size()) throw InvalidArgument("white_noise_moments: grid index out of range");
    double* g = m.gram.data() + p * width * width;
    for (std::size_t c = 0; c < pairs.size(); ++c) {
      const auto [a, b] = pairs[c];
      g[a * width + b] = g[b * width + a] = sums[c][wanted[p]];
    }
  }
  return m;
}

JetMoments white_noise_moments(const VoxelSet& source, const GaussianKernel& kernel, std::span<const Vec> points,
                               Order order, Parallelism par) {
  const int D = source.dim();
  const int width = jet_width(D, order);
  JetMoments m;
  m.dim = D;
  m.width = width;
  m.n_points = points.size();
  m.gram.assign(points.size() * width * width, 0.0);
  parallel_for(points.size(), par, [&](std::size_t begin, std::size_t end) {
    PointWeights w;
    for (std::size_t p = begin; p < end; ++p) {
      kernel_weights(source, kernel, points[p], order, w);
      double* g = m.gram.data() + p * width * width;
      for (std::size_t v = 0; v < source.size(); ++v) {
        double j[1 + kMaxDim];
        j[0] = w.k[v];
        for (int d = 0; d + 1 < width; ++d) j[d + 1] = w.g[v * D + d];
        for (int a = 0; a < width; ++a)
          for (int b = 0; b < width; ++b) g[a * width + b] += j[a] * j[b];
      }
    }
  });
  return m;
}

JetMoments ensemble_moments(const FieldEnsemble& ensemble, const GaussianKernel& kernel, const ProductGrid& grid,
                            std::span<const std::size_t> wanted, Order order, Parallelism par) {
  const VoxelSet& source = ensemble.domain();
  const int D = source.dim();
  const int width = jet_width(D, order);
  const std::size_t N = ensemble.n_fields();
  SeparableEvaluator ev(source, kernel, grid);
  const auto combos = jet_combos(D, order);
  for (std::size_t idx : wanted) {
    if (idx >= grid.size()) throw InvalidArgument("ensemble_moments: grid index out of range");
  }

  JetMoments m;
  m.dim = D;
  m.width = width;
  m.n_points = wanted.size();
  m.n_fields = N;
  m.mean.assign(wanted.size() * width, 0.0);
  m.gram.assign(wanted.size() * width * width, 0.0);

  const std::size_t batch = std::max<std::size_t>(1, par.threads);
  std::vector<std::vector<std::vector<double>>> smoothed(batch);
  for (std::size_t first = 0; first < N; first += batch) {
    const std::size_t count = std::min(batch, N - first);
    parallel_for(count, par, [&](std::size_t b0, std::size_t b1) {
      for (std::size_t b = b0; b < b1; ++b) {
        smoothed[b] = ev.contract(ev.scatter(ensemble.field(first + b)), combos);
      }
    });
    parallel_for(wanted.size(), par, [&](std::size_t p0, std::size_t p1) {
      double y[1 + kMaxDim];
      for (std::size_t p = p0; p < p1; ++p) {
        for (std::size_t b = 0; b < count; ++b) {
          for (int a = 0; a < width; ++a) y[a] = smoothed[b][a][wanted[p]];
          welford_update(m.mean.data() + p * width, m.gram.data() + p * width * width, y, width, first + b + 1);
        }
      }
    });
  }
  return m;
}

JetMoments ensemble_moments(const FieldEnsemble& ensemble, const GaussianKernel& kernel,
                            std::span<const Vec> points, Order order, Parallelism par) {
  const VoxelSet& source = ensemble.domain();
  const int D = source.dim();
  const int width = jet_width(D, order);
  const std::size_t N = ensemble.n_fields();
  const std::size_t nv = source.size();
  const auto data = ensemble.voxel_major();
  JetMoments m;
  m.dim = D;
  m.width = width;
  m.n_points = points.size();
  m.n_fields = N;
  m.mean.assign(points.size() * width, 0.0);
  m.gram.assign(points.size() * width * width, 0.0);
  parallel_for(points.size(), par, [&](std::size_t begin, std::size_t end) {
    PointWeights w;
    std::vector<double> y(N * width);
    for (std::size_t p = begin; p < end; ++p) {
      kernel_weights(source, kernel, points[p], order, w);
      std::fill(y.begin(), y.end(), 0.0);
      for (std::size_t v = 0; v < nv; ++v) {
        double j[1 + kMaxDim];
        j[0] = w.k[v];
        for (int d = 0; d + 1 < width; ++d) j[d + 1] = w.g[v * D + d];
        const double* x = data.data() + v * N;
        for (std::size_t i = 0; i < N; ++i) {
          for (int a = 0; a < width; ++a) y[i * width + a] += j[a] * x[i];
        }
      }
      for (std::size_t i = 0; i < N; ++i) {
        welford_update(m.mean.data() + p * width, m.gram.data() + p * width * width, y.data() + i * width, width,
                       i + 1);
      }
    }
  });
  return m;
}

}  // namespace surfield
