#include "surfield/surf.hpp"

#include <cmath>

#include "surfield/error.hpp"
#include "surfield/grid_eval.hpp"

namespace surfield {

namespace {

constexpr double kMinNorm = 1e-30;

void check_points(const SurfSpec& spec, std::span<const Vec> points) {
  const int D = spec.ensemble->domain().dim();
  for (const auto& p : points) {
    if (p.size() != D) throw InvalidArgument("surf: query point has wrong dimension");
    if (!p.allFinite()) throw InvalidArgument("surf: query point is not finite");
  }
}

}  // namespace

SurfSpec::SurfSpec(std::shared_ptr<const FieldEnsemble> e, GaussianKernel k, bool normalize, LatticeCovariance cov)
    : ensemble(std::move(e)), kernel(std::move(k)), normalized(normalize), lattice_covariance(std::move(cov)) {
  if (!ensemble) throw InvalidArgument("SurfSpec: null ensemble");
  if (ensemble->domain().dim() != kernel.dim()) {
    throw InvalidArgument("SurfSpec: kernel and ensemble dimensions differ");
  }
}

Vec SurfValues::gradient(std::size_t p) const {
  Vec g(dim);
  for (int d = 0; d < dim; ++d) g[d] = gradients[p * dim + d];
  return g;
}

Mat SurfValues::hessian(std::size_t p) const {
  Mat h(dim, dim);
  for (int d = 0; d < dim; ++d)
    for (int e = 0; e < dim; ++e) h(d, e) = hessians[p * dim * dim + d * dim + e];
  return h;
}

KernelNorm kernel_norm_squared(const GaussianKernel& kernel, const VoxelSet& domain, const LatticeCovariance& cov,
                               const Vec& x, Order order) {
  const int D = domain.dim();
  const std::size_t n = domain.size();
  PointWeights w;
  kernel_weights(domain, kernel, x, order, w);
  KernelNorm out;
  if (order != Order::value) out.gradient = Vec::Zero(D);
  if (order == Order::hessian) out.hessian = Mat::Zero(D, D);
  // S = sum_uv K_u K_v c_uv, dS = 2 sum_uv dK_u K_v c_uv,
  // d2S = 2 sum_uv (d2K_u K_v + dK_u dK_v^T) c_uv
  auto accumulate = [&](std::size_t u, std::size_t v, double c) {
    out.value += w.k[u] * w.k[v] * c;
    if (order == Order::value) return;
    for (int d = 0; d < D; ++d) out.gradient[d] += 2.0 * w.g[u * D + d] * w.k[v] * c;
    if (order != Order::hessian) return;
    for (int d = 0; d < D; ++d)
      for (int e = 0; e < D; ++e) {
        out.hessian(d, e) += 2.0 * (w.h[u * D * D + d * D + e] * w.k[v] + w.g[u * D + d] * w.g[v * D + e]) * c;
      }
  };
  if (!cov) {
    for (std::size_t v = 0; v < n; ++v) accumulate(v, v, 1.0);
  } else {
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v = 0; v < n; ++v) accumulate(u, v, cov(u, v));
  }
  if (order == Order::hessian) out.hessian = 0.5 * (out.hessian + out.hessian.transpose()).eval();
  return out;
}

double surf_covariance(const GaussianKernel& kernel, const VoxelSet& domain, const LatticeCovariance& cov,
                       const Vec& x, const Vec& y) {
  PointWeights wx, wy;
  kernel_weights(domain, kernel, x, Order::value, wx);
  kernel_weights(domain, kernel, y, Order::value, wy);
  const std::size_t n = domain.size();
  double s = 0.0;
  if (!cov) {
    for (std::size_t v = 0; v < n; ++v) s += wx.k[v] * wy.k[v];
  } else {
    for (std::size_t u = 0; u < n; ++u) {
      if (wx.k[u] == 0.0) continue;
      for (std::size_t v = 0; v < n; ++v) s += wx.k[u] * wy.k[v] * cov(u, v);
    }
  }
  return s;
}

SurfValues surf_eval(const SurfSpec& spec, std::span<const Vec> points, Order order, std::size_t field,
                     Parallelism par) {
  const FieldEnsemble& ens = *spec.ensemble;
  if (field >= ens.n_fields()) throw InvalidArgument("surf_eval: field index out of range");
  check_points(spec, points);
  const VoxelSet& dom = ens.domain();
  const int D = dom.dim();
  const std::size_t n = dom.size();
  const std::size_t N = ens.n_fields();
  const auto data = ens.voxel_major();

  SurfValues out;
  out.order = order;
  out.dim = D;
  out.values.resize(points.size());
  if (order != Order::value) out.gradients.resize(points.size() * D);
  if (order == Order::hessian) out.hessians.resize(points.size() * D * D);

  parallel_for(points.size(), par, [&](std::size_t begin, std::size_t end) {
    PointWeights w;
    for (std::size_t p = begin; p < end; ++p) {
      kernel_weights(dom, spec.kernel, points[p], order, w);
      double f = 0.0;
      Vec g = Vec::Zero(D);
      Mat h = Mat::Zero(D, D);
      for (std::size_t v = 0; v < n; ++v) {
        const double x = data[v * N + field];
        f += w.k[v] * x;
        if (order == Order::value) continue;
        for (int d = 0; d < D; ++d) g[d] += w.g[v * D + d] * x;
        if (order != Order::hessian) continue;
        for (int d = 0; d < D; ++d)
          for (int e = 0; e < D; ++e) h(d, e) += w.h[v * D * D + d * D + e] * x;
      }
      if (spec.normalized) {
        const auto S = kernel_norm_squared(spec.kernel, dom, spec.lattice_covariance, points[p], order);
        if (!(S.value > kMinNorm)) throw DegenerateError("surf_eval: kernel norm vanishes at a query point");
        const double s = std::sqrt(S.value);
        if (order == Order::value) {
          f /= s;
        } else {
          const Vec ds = S.gradient / (2.0 * s);
          if (order == Order::hessian) {
            const Mat d2s = S.hessian / (2.0 * s) - S.gradient * S.gradient.transpose() / (4.0 * s * s * s);
            h = (h / s - (g * ds.transpose() + ds * g.transpose()) / (s * s) - f * d2s / (s * s) +
                 2.0 * f * ds * ds.transpose() / (s * s * s))
                    .eval();
          }
          g = (g / s - f * ds / (s * s)).eval();
          f /= s;
        }
      }
      out.values[p] = f;
      if (order == Order::value) continue;
      for (int d = 0; d < D; ++d) out.gradients[p * D + d] = g[d];
      if (order != Order::hessian) continue;
      for (int d = 0; d < D; ++d)
        for (int e = 0; e < D; ++e) out.hessians[p * D * D + d * D + e] = h(d, e);
    }
  });
  return out;
}

SurfValues t_field(const SurfSpec& spec, std::span<const Vec> points, Order order, Parallelism par) {
  if (order == Order::hessian) throw InvalidArgument("t_field: only value and gradient are supported");
  const FieldEnsemble& ens = *spec.ensemble;
  const std::size_t N = ens.n_fields();
  if (N < 2) throw InvalidArgument("t_field: needs at least two fields");
  check_points(spec, points);
  const int D = ens.domain().dim();
  // the statistic is invariant to the positive normalization factor, so work unnormalized
  const JetMoments m = ensemble_moments(ens, spec.kernel, points, order, par);
  SurfValues out;
  out.order = order;
  out.dim = D;
  out.values.resize(points.size());
  if (order == Order::gradient) out.gradients.resize(points.size() * D);
  const double sqrtN = std::sqrt(static_cast<double>(N));
  for (std::size_t p = 0; p < points.size(); ++p) {
    const double* mu = m.mean_at(p);
    const double* g = m.gram_at(p);
    const double var = g[0] / static_cast<double>(N - 1);
    if (!(var > 0.0) || !(var > 1e-28 * (mu[0] * mu[0] + 1e-300))) {
      throw DegenerateError("t_field: zero sample variance at a query point");
    }
    const double sd = std::sqrt(var);
    out.values[p] = sqrtN * mu[0] / sd;
    if (order == Order::value) continue;
    for (int d = 0; d < D; ++d) {
      // d sd = cov(X, dX) / sd
      const double dsd = g[d + 1] / static_cast<double>(N - 1) / sd;
      out.gradients[p * D + d] = sqrtN * (mu[d + 1] / sd - mu[0] * dsd / var);
    }
  }
  return out;
}

}  // namespace surfield
