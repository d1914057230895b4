#include "surfield/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "surfield/error.hpp"
#include "surfield/grid_eval.hpp"

namespace surfield {

namespace {

constexpr double kClip = 1e-12;

std::string where(const Vec& x) {
  std::ostringstream os;
  os << '(';
  for (int d = 0; d < x.size(); ++d) os << (d ? ", " : "") << x[d];
  os << ')';
  return os.str();
}

Mat metric_from_gram(const double* g, int D, int width) {
  const double S = g[0];
  Mat L(D, D);
  for (int d = 0; d < D; ++d)
    for (int e = 0; e < D; ++e) {
      L(d, e) = g[(d + 1) * width + (e + 1)] / S - g[d + 1] * g[e + 1] / (S * S);
    }
  return 0.5 * (L + L.transpose());
}

}  // namespace

GeometrySource GeometrySource::white_noise(VoxelSetPtr data_domain) {
  if (!data_domain) throw InvalidArgument("GeometrySource: null domain");
  GeometrySource s;
  s.domain_ = std::move(data_domain);
  return s;
}

GeometrySource GeometrySource::ensemble(std::shared_ptr<const FieldEnsemble> fields) {
  if (!fields) throw InvalidArgument("GeometrySource: null ensemble");
  if (fields->n_fields() < 2) throw InvalidArgument("GeometrySource: ensemble needs N >= 2");
  GeometrySource s;
  s.domain_ = fields->domain_ptr();
  s.fields_ = std::move(fields);
  return s;
}

JetInnerProducts jet_inner_products(const GeometrySource& source, const GaussianKernel& kernel, const Vec& x,
                                    bool second_order) {
  const VoxelSet& dom = source.domain();
  const int D = dom.dim();
  if (kernel.dim() != D || x.size() != D) throw InvalidArgument("geometry: dimension mismatch");
  PointWeights w;
  kernel_weights(dom, kernel, x, second_order ? Order::hessian : Order::gradient, w);
  const std::size_t n = dom.size();
  // jet layout: value, D gradient entries, D*D Hessian entries
  const int width = 1 + D + (second_order ? D * D : 0);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(width, width);
  if (!source.is_ensemble()) {
    Eigen::VectorXd j(width);
    for (std::size_t v = 0; v < n; ++v) {
      j[0] = w.k[v];
      for (int d = 0; d < D; ++d) j[1 + d] = w.g[v * D + d];
      if (second_order)
        for (int q = 0; q < D * D; ++q) j[1 + D + q] = w.h[v * D * D + q];
      G.noalias() += j * j.transpose();
    }
  } else {
    const FieldEnsemble& ens = source.fields();
    const std::size_t N = ens.n_fields();
    const auto data = ens.voxel_major();
    Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(width, static_cast<Eigen::Index>(N));
    for (std::size_t v = 0; v < n; ++v) {
      const double* xv = data.data() + v * N;
      for (std::size_t i = 0; i < N; ++i) {
        Y(0, i) += w.k[v] * xv[i];
        for (int d = 0; d < D; ++d) Y(1 + d, i) += w.g[v * D + d] * xv[i];
        if (second_order)
          for (int q = 0; q < D * D; ++q) Y(1 + D + q, i) += w.h[v * D * D + q] * xv[i];
      }
    }
    const Eigen::VectorXd mean = Y.rowwise().mean();
    Y.colwise() -= mean;
    G = Y * Y.transpose() / static_cast<double>(N - 1);
  }
  JetInnerProducts ip;
  ip.dim = D;
  ip.S = G(0, 0);
  if (!(ip.S > 0.0)) throw DegenerateError("geometry: zero variance of the field at " + where(x));
  ip.a = Vec(D);
  ip.B = Mat(D, D);
  for (int d = 0; d < D; ++d) {
    ip.a[d] = G(1 + d, 0);
    for (int e = 0; e < D; ++e) ip.B(d, e) = G(1 + d, 1 + e);
  }
  if (second_order) {
    ip.C = Mat(D, D);
    for (int k = 0; k < D; ++k) {
      ip.E[k] = Mat(D, D);
      for (int d = 0; d < D; ++d) {
        const int hd = 1 + D + k * D + d;
        ip.C(k, d) = G(hd, 0);
        for (int e = 0; e < D; ++e) ip.E[k](d, e) = G(hd, 1 + e);
      }
    }
  }
  return ip;
}

Mat metric_from_inner_products(const JetInnerProducts& ip) {
  const Mat L = ip.B / ip.S - ip.a * ip.a.transpose() / (ip.S * ip.S);
  return 0.5 * (L + L.transpose());
}

Christoffel christoffel_from_inner_products(const JetInnerProducts& ip) {
  const int D = ip.dim;
  if (ip.C.size() == 0) throw InvalidArgument("christoffel: second-order inner products missing");
  const double S = ip.S, S2 = S * S, S3 = S2 * S;
  Christoffel c;
  c.dim = D;
  for (int k = 0; k < D; ++k)
    for (int d = 0; d < D; ++d)
      for (int e = 0; e < D; ++e) {
        c(k, d, e) = ip.E[k](d, e) / S - ip.C(k, d) * ip.a[e] / S2 - ip.a[k] * ip.B(d, e) / S2 -
                     ip.a[d] * ip.B(k, e) / S2 + 2.0 * ip.a[k] * ip.a[d] * ip.a[e] / S3;
      }
  return c;
}

Mat metric(const GeometrySource& source, const GaussianKernel& kernel, const Vec& x) {
  return metric_from_inner_products(jet_inner_products(source, kernel, x, false));
}

Christoffel christoffel(const GeometrySource& source, const GaussianKernel& kernel, const Vec& x) {
  return christoffel_from_inner_products(jet_inner_products(source, kernel, x, true));
}

Frame orthonormal_frame(const Mat& L, int k, int l) {
  if (L.rows() != 3 || L.cols() != 3) throw InvalidArgument("orthonormal_frame: needs a 3x3 metric");
  if (!(0 <= k && k < l && l < 3)) throw InvalidArgument("orthonormal_frame: need 0 <= k < l < 3");
  const int m = 3 - k - l;
  const double c = L(k, k) * L(l, l) - L(k, l) * L(k, l);
  if (!(L(k, k) > 0.0) || !(c > 0.0)) throw DegenerateError("orthonormal_frame: singular metric");
  Frame f;
  f.U = Vec::Zero(3);
  f.V = Vec::Zero(3);
  f.U[k] = 1.0 / std::sqrt(L(k, k));
  f.V[k] = L(k, l) / std::sqrt(c * L(k, k));
  f.V[l] = -std::sqrt(L(k, k) / c);
  Eigen::FullPivLU<Mat> lu(L);
  if (!lu.isInvertible()) throw DegenerateError("orthonormal_frame: singular metric");
  Vec em = Vec::Zero(3);
  em[m] = 1.0;
  const Vec w = lu.solve(em);
  if (!(w[m] > 0.0)) throw DegenerateError("orthonormal_frame: metric is not positive definite");
  f.N = w / std::sqrt(w[m]);
  return f;
}

double theta_angle(const Mat& L, int k, EdgeType type) {
  if (L.rows() != 3) throw InvalidArgument("theta_angle: needs a 3x3 metric");
  if (k < 0 || k > 2) throw InvalidArgument("theta_angle: tangent axis must be 0, 1 or 2");
  const int a = k == 0 ? 1 : 0;
  const int b = k == 2 ? 1 : 2;
  const int order[3] = {k, a, b};
  Mat P(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) P(i, j) = L(order[i], order[j]);
  const Frame f = orthonormal_frame(P, 0, 1);
  const Eigen::Vector3d v(f.V[0], f.V[1], f.V[2]);
  const Eigen::Vector3d n(f.N[0], f.N[1], f.N[2]);
  const Eigen::Vector3d mvec = v.cross(n);
  const double den = std::sqrt(mvec[1] * mvec[1] + mvec[0] * mvec[0]) * std::sqrt(mvec[2] * mvec[2] + mvec[0] * mvec[0]);
  if (!(den > 0.0)) throw DegenerateError("theta_angle: degenerate edge frame");
  const double beta = std::acos(std::clamp(mvec[1] * mvec[2] / den, -1.0, 1.0));
  switch (type) {
    case EdgeType::convex:
      return std::numbers::pi - beta;
    case EdgeType::double_convex:
      return -2.0 * beta;
    case EdgeType::concave:
      return beta - std::numbers::pi;
  }
  return 0.0;
}

double sqrt_det_clipped(const Mat& m, bool* clipped) {
  if (clipped) *clipped = false;
  if (m.rows() == 1) {
    if (m(0, 0) > kClip) return std::sqrt(m(0, 0));
    if (clipped) *clipped = true;
    return std::sqrt(kClip);
  }
  Eigen::LLT<Mat> llt(m);
  if (llt.info() == Eigen::Success) {
    const Mat Lf = llt.matrixL();
    double prod = 1.0;
    bool ok = true;
    for (int i = 0; i < m.rows(); ++i) {
      if (!(Lf(i, i) * Lf(i, i) > kClip)) ok = false;
      prod *= Lf(i, i);
    }
    if (ok) return prod;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  double prod = 1.0;
  for (int i = 0; i < m.rows(); ++i) {
    double ev = es.eigenvalues()[i];
    if (!(ev > kClip)) {
      ev = kClip;
      if (clipped) *clipped = true;
    }
    prod *= ev;
  }
  return std::sqrt(prod);
}

MetricField::MetricField(int dim, Source source, std::vector<double> packed)
    : dim_(dim), source_(source), packed_(std::move(packed)) {
  if (dim_ < 1 || dim_ > kMaxDim) throw InvalidArgument("MetricField: bad dimension");
  if (packed_.size() % packed_size(dim_) != 0) throw InvalidArgument("MetricField: bad packed size");
}

Mat MetricField::at(std::size_t p) const {
  Mat L(dim_, dim_);
  const double* q = packed_.data() + p * packed_size(dim_);
  for (int d = 0; d < dim_; ++d)
    for (int e = d; e < dim_; ++e) L(d, e) = L(e, d) = *q++;
  return L;
}

std::string to_string(MetricField::Source s) {
  switch (s) {
    case MetricField::Source::ensemble_estimate:
      return "estimate";
    case MetricField::Source::white_noise_theory:
      return "white-noise";
    case MetricField::Source::constant:
      return "constant";
  }
  return "unknown";
}

MetricField metric_field(const GeometrySource& source, const GaussianKernel& kernel, const RefinedGrid& grid,
                         Parallelism par) {
  const int D = grid.dim();
  if (source.domain().dim() != D || kernel.dim() != D) throw InvalidArgument("metric_field: dimension mismatch");
  JetMoments mom;
  if (SeparableEvaluator::supports(source.domain(), kernel)) {
    const ProductGrid pg = grid.product_grid();
    mom = source.is_ensemble()
              ? ensemble_moments(source.fields(), kernel, pg, grid.dense_indices(), Order::gradient, par)
              : white_noise_moments(source.domain(), kernel, pg, grid.dense_indices(), Order::gradient, par);
  } else {
    const auto pts = grid.points();
    mom = source.is_ensemble() ? ensemble_moments(source.fields(), kernel, pts, Order::gradient, par)
                               : white_noise_moments(source.domain(), kernel, pts, Order::gradient, par);
  }
  return metric_field_from_moments(mom, grid);
}

MetricField metric_field_from_moments(const JetMoments& mom, const RefinedGrid& grid) {
  const int D = grid.dim();
  if (mom.n_points != grid.size() || mom.dim != D || mom.width != D + 1) {
    throw InvalidArgument("metric_field_from_moments: moments do not match the grid");
  }
  const std::size_t ps = MetricField::packed_size(D);
  std::vector<double> packed(grid.size() * ps);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const double* g = mom.gram_at(p);
    if (!(g[0] > 0.0)) throw DegenerateError("metric_field: zero field variance at grid point " + where(grid.point(p)));
    const Mat L = metric_from_gram(g, D, mom.width);
    double* q = packed.data() + p * ps;
    for (int d = 0; d < D; ++d)
      for (int e = d; e < D; ++e) *q++ = L(d, e);
  }
  return MetricField(D, mom.n_fields > 0 ? MetricField::Source::ensemble_estimate : MetricField::Source::white_noise_theory,
                     std::move(packed));
}

MetricField constant_metric_field(const RefinedGrid& grid, const Mat& L) {
  const int D = grid.dim();
  if (L.rows() != D || L.cols() != D) throw InvalidArgument("constant_metric_field: dimension mismatch");
  const std::size_t ps = MetricField::packed_size(D);
  std::vector<double> packed(grid.size() * ps);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    double* q = packed.data() + p * ps;
    for (int d = 0; d < D; ++d)
      for (int e = d; e < D; ++e) *q++ = L(d, e);
  }
  return MetricField(D, MetricField::Source::constant, std::move(packed));
}

std::vector<Christoffel> christoffel_field(const GeometrySource& source, const GaussianKernel& kernel,
                                           const RefinedGrid& grid, std::span<const std::size_t> points,
                                           Parallelism par) {
  std::vector<Christoffel> out(points.size());
  parallel_for(points.size(), par, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = christoffel(source, kernel, grid.point(points[i]));
  });
  return out;
}

}  // namespace surfield
