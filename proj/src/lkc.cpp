#include "surfield/lkc.hpp"

#include <cmath>
#include <numbers>

#include "surfield/error.hpp"
#include "surfield/parallel.hpp"

namespace surfield {

std::string to_string(LkcSource s) {
  switch (s) {
    case LkcSource::estimate:
      return "estimate";
    case LkcSource::white_noise_theory:
      return "white-noise";
    case LkcSource::stationary_closed_form:
      return "closed-form";
    case LkcSource::constant_metric:
      return "constant-metric";
  }
  return "unknown";
}

namespace {

Mat face_submatrix(const Mat& L, int normal_axis) {
  const int D = static_cast<int>(L.rows());
  Mat sub(D - 1, D - 1);
  int i = 0;
  for (int d = 0; d < D; ++d) {
    if (d == normal_axis) continue;
    int j = 0;
    for (int e = 0; e < D; ++e) {
      if (e == normal_axis) continue;
      sub(i, j++) = L(d, e);
    }
    ++i;
  }
  return sub;
}

}  // namespace

LkcVector lkc_from_metric_field(const VoxelManifold& manifold, const RefinedGrid& grid, const MetricField& metric) {
  const int D = grid.dim();
  if (grid.r() < 1) throw InvalidArgument("lkc: added resolution must be odd and positive");
  if (metric.size() != grid.size() || metric.dim() != D) throw InvalidArgument("lkc: metric field does not match grid");
  LkcVector out;
  out.dim = D;
  out.r = grid.r();
  switch (metric.source()) {
    case MetricField::Source::ensemble_estimate:
      out.source = LkcSource::estimate;
      break;
    case MetricField::Source::white_noise_theory:
      out.source = LkcSource::white_noise_theory;
      break;
    case MetricField::Source::constant:
      out.source = LkcSource::constant_metric;
      break;
  }

  std::vector<double> terms(grid.size());
  std::vector<char> clipped(grid.size(), 0);
  const auto& vw = grid.volume_weights();
  for (std::size_t p = 0; p < grid.size(); ++p) {
    bool c = false;
    terms[p] = vw[p] * sqrt_det_clipped(metric.at(p), &c);
    clipped[p] = c;
  }
  out.L[D] = pairwise_sum(terms);

  if (D >= 2) {
    const auto& faces = grid.face_samples();
    terms.resize(faces.size());
    for (std::size_t i = 0; i < faces.size(); ++i) {
      const auto& f = faces[i];
      bool c = false;
      terms[i] = f.weight * sqrt_det_clipped(face_submatrix(metric.at(f.point), f.normal_axis), &c);
      if (c) clipped[f.point] = 1;
    }
    out.L[D - 1] = 0.5 * pairwise_sum(terms);
  }

  if (D == 3) {
    const auto& edges = grid.edge_samples();
    terms.resize(edges.size());
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const auto& e = edges[i];
      const Mat L = metric.at(e.point);
      const double len = L(e.axis, e.axis) > 1e-12 ? std::sqrt(L(e.axis, e.axis)) : 1e-6;
      if (!(L(e.axis, e.axis) > 1e-12)) clipped[e.point] = 1;
      terms[i] = e.weight * theta_angle(L, e.axis, e.type) * len;
    }
    out.L[1] = pairwise_sum(terms) / (2.0 * std::numbers::pi);
    out.l1_locally_stationary = true;
  }
  out.L[0] = static_cast<double>(euler_characteristic(manifold));
  for (char c : clipped) out.clipped_points += c ? 1 : 0;
  return out;
}

double l1_face_term(const RefinedGrid& grid, const MetricField& metric, std::span<const Christoffel> gamma) {
  if (grid.dim() != 3) throw InvalidArgument("l1_face_term: only defined for D = 3");
  const auto& faces = grid.face_samples();
  if (gamma.size() != faces.size()) throw InvalidArgument("l1_face_term: one Christoffel array per face sample");
  std::vector<double> terms(faces.size());
  for (std::size_t i = 0; i < faces.size(); ++i) {
    const auto& f = faces[i];
    const Mat L = metric.at(f.point);
    const int n = f.normal_axis;
    const int k = n == 0 ? 1 : 0;
    const int l = n == 2 ? 1 : 2;
    const Frame fr = orthonormal_frame(L, k, l);
    const Vec N = static_cast<double>(f.outward) * fr.N;
    // Lambda(nabla_U U + nabla_V V, N) = sum_ab (U_a U_b + V_a V_b) sum_h Gamma_abh N_h
    double s = 0.0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const double w = fr.U[a] * fr.U[b] + fr.V[a] * fr.V[b];
        if (w == 0.0) continue;
        double gn = 0.0;
        for (int h = 0; h < 3; ++h) gn += gamma[i](a, b, h) * N[h];
        s += w * gn;
      }
    terms[i] = f.weight * s * sqrt_det_clipped(face_submatrix(L, n));
  }
  return pairwise_sum(terms) / (2.0 * std::numbers::pi);
}

LkcVector lkc_compute(const GeometrySource& source, const GaussianKernel& kernel, const VoxelManifold& manifold,
                      int r, LkcOptions options, Parallelism par) {
  if (r < 1 || r % 2 == 0) throw InvalidArgument("lkc_compute: added resolution must be odd and positive");
  if (source.domain().dim() != manifold.dim()) throw InvalidArgument("lkc_compute: dimension mismatch");
  const RefinedGrid grid = refined_grid(manifold, r);
  const MetricField mf = metric_field(source, kernel, grid, par);
  LkcVector out = lkc_from_metric_field(manifold, grid, mf);
  if (options.l1_face_term && manifold.dim() == 3) {
    std::vector<std::size_t> pts;
    for (const auto& f : grid.face_samples()) pts.push_back(f.point);
    const auto gamma = christoffel_field(source, kernel, grid, pts, par);
    out.L[1] += l1_face_term(grid, mf, gamma);
    out.l1_face_term = true;
  }
  return out;
}

LkcVector lkc_stationary_closed_form(std::span<const double> sides, double fwhm) {
  const int D = static_cast<int>(sides.size());
  if (D < 1 || D > kMaxDim) throw InvalidArgument("lkc_stationary_closed_form: need 1 to 3 side lengths");
  if (!(fwhm > 0.0)) throw InvalidArgument("lkc_stationary_closed_form: FWHM must be positive");
  for (double s : sides) {
    if (!(s > 0.0)) throw InvalidArgument("lkc_stationary_closed_form: side lengths must be positive");
  }
  const double c = std::sqrt(4.0 * std::numbers::ln2) / fwhm;
  // elementary symmetric polynomials of the side lengths are the box's intrinsic volumes
  std::array<double, 4> e{1.0, 0.0, 0.0, 0.0};
  for (double s : sides) {
    for (int d = D; d >= 1; --d) e[d] += e[d - 1] * s;
  }
  LkcVector out;
  out.dim = D;
  out.source = LkcSource::stationary_closed_form;
  out.l1_locally_stationary = false;
  for (int d = 0; d <= D; ++d) out.L[d] = e[d] * std::pow(c, d);
  return out;
}

}  // namespace surfield
