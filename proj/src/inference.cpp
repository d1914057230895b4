#include "surfield/inference.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include <Eigen/SVD>

#include "surfield/error.hpp"

namespace surfield {

std::vector<double> t_values_from_moments(const JetMoments& m) {
  if (m.n_fields < 2) throw InvalidArgument("t statistic needs at least two fields");
  const double N = static_cast<double>(m.n_fields);
  std::vector<double> t(m.n_points);
  for (std::size_t p = 0; p < m.n_points; ++p) {
    const double var = m.gram_at(p)[0] / (N - 1.0);
    if (!(var > 0.0)) throw DegenerateError("t statistic: zero sample variance");
    t[p] = std::sqrt(N) * m.mean_at(p)[0] / std::sqrt(var);
  }
  return t;
}

std::vector<double> t_field_on_grid(const SurfSpec& spec, const RefinedGrid& grid, Parallelism par) {
  const FieldEnsemble& ens = *spec.ensemble;
  if (SeparableEvaluator::supports(ens.domain(), spec.kernel)) {
    return t_values_from_moments(
        ensemble_moments(ens, spec.kernel, grid.product_grid(), grid.dense_indices(), Order::value, par));
  }
  const auto pts = grid.points();
  return t_values_from_moments(ensemble_moments(ens, spec.kernel, pts, Order::value, par));
}

namespace {

template <class F>
void for_each_neighbour(const RefinedGrid& grid, std::size_t p, F&& f) {
  const int D = grid.dim();
  const Index3& g = grid.index(p);
  const int n1 = D > 1 ? 1 : 0;
  const int n2 = D > 2 ? 1 : 0;
  for (int c = -n2; c <= n2; ++c)
    for (int b = -n1; b <= n1; ++b)
      for (int a = -1; a <= 1; ++a) {
        if (a == 0 && b == 0 && c == 0) continue;
        const Index3 q{g[0] + a, g[1] + b, g[2] + c};
        if (auto j = grid.find(q)) f(*j);
      }
}

}  // namespace

std::vector<std::size_t> local_maxima(const RefinedGrid& grid, std::span<const double> values) {
  if (values.size() != grid.size()) throw InvalidArgument("local_maxima: one value per grid point required");
  std::vector<char> visited(grid.size(), 0);
  std::vector<std::size_t> maxima;
  std::deque<std::size_t> queue;
  std::vector<std::size_t> plateau;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    if (visited[p]) continue;
    const double v = values[p];
    bool greater = false, equal = false;
    for_each_neighbour(grid, p, [&](std::size_t q) {
      if (values[q] > v) greater = true;
      if (values[q] == v) equal = true;
    });
    if (greater) {
      visited[p] = 1;
      continue;
    }
    if (!equal) {
      visited[p] = 1;
      maxima.push_back(p);
      continue;
    }
    // flood fill the plateau
    bool is_max = true;
    plateau.clear();
    queue.clear();
    queue.push_back(p);
    visited[p] = 1;
    while (!queue.empty()) {
      const std::size_t q = queue.front();
      queue.pop_front();
      plateau.push_back(q);
      for_each_neighbour(grid, q, [&](std::size_t w) {
        if (values[w] > v) is_max = false;
        if (values[w] == v && !visited[w]) {
          visited[w] = 1;
          queue.push_back(w);
        }
      });
    }
    if (is_max) maxima.push_back(*std::min_element(plateau.begin(), plateau.end()));
  }
  std::stable_sort(maxima.begin(), maxima.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  return maxima;
}

std::size_t count_local_maxima_above(const RefinedGrid& grid, std::span<const double> values, double u) {
  std::size_t n = 0;
  for (std::size_t p : local_maxima(grid, values)) {
    if (values[p] > u) ++n;
  }
  return n;
}

namespace {

struct Eval {
  double t;
  Vec g;
};

Eval eval_t(const SurfSpec& spec, const Vec& x) {
  const Vec pts[1] = {x};
  const SurfValues s = t_field(spec, pts, Order::gradient);
  return {s.values[0], s.gradient(0)};
}

Vec blocked_projection(const VoxelManifold& m, const Vec& x, const Vec& g) {
  Vec out = g;
  for (int d = 0; d < x.size(); ++d) {
    if (g[d] == 0.0) continue;
    Vec probe = x;
    probe[d] += (g[d] > 0.0 ? 1.0 : -1.0) * 1e-7 * m.spacing()[d];
    if (!m.contains(probe)) out[d] = 0.0;
  }
  return out;
}

std::pair<Vec, double> ascend(const SurfSpec& spec, const VoxelManifold& m, Vec x, const MaximizeOptions& opt) {
  const int D = m.dim();
  Eval cur = eval_t(spec, x);
  Mat H = Mat::Identity(D, D);
  const double hmax = m.spacing().maxCoeff();
  for (int it = 0; it < opt.max_iterations; ++it) {
    const Vec gp = blocked_projection(m, x, cur.g);
    if (gp.norm() < opt.gradient_tol) break;
    Vec p = H * gp;
    for (int d = 0; d < D; ++d) {
      if (gp[d] == 0.0) p[d] = 0.0;
    }
    if (!(gp.dot(p) > 0.0)) {
      H = Mat::Identity(D, D);
      p = gp;
    }
    double alpha = std::min(1.0, hmax / p.norm());
    const auto box_id = m.containing_box(x);
    if (!box_id) throw Error("maximize_t_field: iterate left the voxel manifold");
    const auto [lo, hi] = m.box(*box_id);
    bool accepted = false;
    bool tiny = false;
    Vec y, s;
    Eval next;
    for (int ls = 0; ls < 60; ++ls) {
      y = x + alpha * p;
      if (!m.contains(y)) y = y.cwiseMax(lo).cwiseMin(hi);
      s = y - x;
      if (s.norm() < opt.step_tol) {
        tiny = true;
        break;
      }
      next = eval_t(spec, y);
      if (next.t >= cur.t + 1e-4 * cur.g.dot(s)) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
    const Vec yk = -(next.g - cur.g);
    const double sy = s.dot(yk);
    if (sy > 1e-14) {
      const double rho = 1.0 / sy;
      const Mat I = Mat::Identity(D, D);
      H = ((I - rho * s * yk.transpose()) * H * (I - rho * yk * s.transpose()) + rho * s * s.transpose()).eval();
    }
    x = y;
    cur = next;
    if (tiny || s.norm() < opt.step_tol) break;
  }
  return {x, cur.t};
}

}  // namespace

MaximizeResult maximize_t_field(const SurfSpec& spec, const VoxelManifold& manifold, const RefinedGrid& grid,
                                std::span<const double> grid_values, MaximizeOptions options) {
  if (options.starts < 1) throw InvalidArgument("maximize_t_field: need at least one start");
  if (grid_values.size() != grid.size()) throw InvalidArgument("maximize_t_field: one value per grid point");
  if (spec.ensemble->n_fields() < 2) throw InvalidArgument("maximize_t_field: needs N >= 2");
  MaximizeResult res;
  const auto best = std::max_element(grid_values.begin(), grid_values.end());
  res.grid_max = *best;
  res.value = *best;
  res.argmax = grid.point(static_cast<std::size_t>(best - grid_values.begin()));

  const auto peaks = local_maxima(grid, grid_values);
  const std::size_t k = std::min(options.starts, peaks.size());
  std::vector<std::pair<Vec, double>> found;
  for (std::size_t i = 0; i < k; ++i) found.push_back(ascend(spec, manifold, grid.point(peaks[i]), options));
  std::stable_sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  for (const auto& [x, t] : found) {
    bool dup = false;
    for (const auto& y : res.maxima) {
      if ((x - y).norm() < options.merge_distance) dup = true;
    }
    if (dup) continue;
    res.maxima.push_back(x);
    res.maxima_values.push_back(t);
  }
  if (!res.maxima_values.empty() && res.maxima_values.front() > res.value) {
    res.value = res.maxima_values.front();
    res.argmax = res.maxima.front();
  }
  return res;
}

MaximizeResult maximize_t_field(const SurfSpec& spec, const VoxelManifold& manifold, int r_scan,
                                MaximizeOptions options, Parallelism par) {
  if (spec.ensemble->domain().dim() != manifold.dim()) throw InvalidArgument("maximize_t_field: dimension mismatch");
  const RefinedGrid grid = refined_grid(manifold, r_scan);
  const auto values = t_field_on_grid(spec, grid, par);
  return maximize_t_field(spec, manifold, grid, values, options);
}

std::vector<std::size_t> localization_support(const GaussianKernel& kernel, const VoxelSet& domain, const Vec& x) {
  if (x.size() != domain.dim()) throw InvalidArgument("localization_support: dimension mismatch");
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < domain.size(); ++v) {
    if (kernel.within_support(x, domain.point(v))) out.push_back(v);
  }
  return out;
}

NondegeneracyReport nondegeneracy_check(const GaussianKernel& kernel, const VoxelSet& domain, const Vec& x) {
  const int D = domain.dim();
  if (kernel.dim() != D || x.size() != D) throw InvalidArgument("nondegeneracy_check: dimension mismatch");
  const auto support = localization_support(kernel, domain, x);
  NondegeneracyReport rep;
  rep.required = static_cast<std::size_t>(D + 1 + D * (D + 1) / 2);
  rep.support_size = support.size();
  Eigen::MatrixXd A(static_cast<Eigen::Index>(support.size()), static_cast<Eigen::Index>(rep.required));
  for (std::size_t i = 0; i < support.size(); ++i) {
    const auto j = kernel.jet(x, domain.point(support[i]), Order::hessian);
    int c = 0;
    A(i, c++) = j.value;
    for (int d = 0; d < D; ++d) A(i, c++) = j.gradient[d];
    for (int d = 0; d < D; ++d)
      for (int e = d; e < D; ++e) A(i, c++) = j.hessian(d, e);
  }
  if (support.empty()) return rep;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const auto& sv = svd.singularValues();
  for (Eigen::Index i = 0; i < sv.size(); ++i) rep.singular_values.push_back(sv[i]);
  const double tol = 1e-10 * (sv.size() ? sv[0] : 0.0);
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > tol) ++rep.rank;
  }
  rep.pass = rep.rank == rep.required;
  return rep;
}

}  // namespace surfield
