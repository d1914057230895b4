#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "surfield/error.hpp"
#include "surfield/geometry.hpp"
#include "surfield/surf.hpp"
#include "test_util.hpp"

using namespace surfield;
using testutil::vec;

namespace {

constexpr double kPi = std::numbers::pi;

// Metric oracle: sample covariance (N - 1) of central-difference gradients of the
// standardized fields (X~_i - mean) / sd.
Mat fd_metric(const SurfSpec& spec, const Vec& x, double h) {
  const int D = static_cast<int>(x.size());
  const std::size_t N = spec.ensemble->n_fields();
  auto standardized = [&](const Vec& y) {
    std::vector<double> v(N);
    const std::vector<Vec> pts{y};
    double m = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      v[i] = surf_eval(spec, pts, Order::value, i).values[0];
      m += v[i] / double(N);
    }
    double ss = 0.0;
    for (double a : v) ss += (a - m) * (a - m);
    const double sd = std::sqrt(ss / double(N - 1));
    for (double& a : v) a = (a - m) / sd;
    return v;
  };
  std::vector<std::vector<double>> grad(D);
  for (int d = 0; d < D; ++d) {
    Vec xp = x, xm = x;
    xp[d] += h;
    xm[d] -= h;
    const auto a = standardized(xp), b = standardized(xm);
    grad[d].resize(N);
    for (std::size_t i = 0; i < N; ++i) grad[d][i] = (a[i] - b[i]) / (2 * h);
  }
  Mat L(D, D);
  for (int d = 0; d < D; ++d)
    for (int e = 0; e < D; ++e) {
      double md = 0.0, me = 0.0, s = 0.0;
      for (std::size_t i = 0; i < N; ++i) {
        md += grad[d][i] / double(N);
        me += grad[e][i] / double(N);
      }
      for (std::size_t i = 0; i < N; ++i) s += (grad[d][i] - md) * (grad[e][i] - me);
      L(d, e) = s / double(N - 1);
    }
  return L;
}

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("white-noise metric deep inside a long line approaches the stationary limit") {
    const auto line = testutil::box(1, -200, 300);
    const auto src = GeometrySource::white_noise(line);
    const auto k = GaussianKernel::isotropic(1, 3.0);
    const Mat L = metric(src, k, vec({50.3}));
    const double limit = 4 * std::log(2.0) / 9.0;
    // the interval of 100 voxels then has length 100 sqrt(limit) = 55.50
    CHECK(100 * std::sqrt(limit) == doctest::Approx(55.50).epsilon(1e-4));
    CHECK(std::abs(L(0, 0) - limit) / limit < 0.005);
    CHECK(std::abs(christoffel(src, k, vec({50.3}))(0, 0, 0)) < 1e-3);
  }

  TEST_CASE("Christoffel symbols are large near the boundary and symmetric") {
    const auto line = testutil::box(1, 1, 100);
    const auto src = GeometrySource::white_noise(line);
    const auto k = GaussianKernel::isotropic(1, 3.0);
    CHECK(std::abs(christoffel(src, k, vec({50.0}))(0, 0, 0)) < 1e-3);
    CHECK(std::abs(christoffel(src, k, vec({1.2}))(0, 0, 0)) > 1e-3);

    const auto cube = make_domain_preset("nonstat3d", 2.0).data_domain;
    const auto g = christoffel(GeometrySource::white_noise(cube), GaussianKernel::isotropic(3, 2.0), vec({2.3, 1.1, 10.6}));
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c) CHECK(g(a, b, c) == doctest::Approx(g(b, a, c)).epsilon(1e-12));
  }

  TEST_CASE("Christoffel symbols are the derivative of the metric") {
    // Gamma_kde + Gamma_ekd = d_k Lambda_de for the first-kind symbols of this metric
    const auto dom = make_domain_preset("nonstat2d", 2.0).data_domain;
    const auto src = GeometrySource::white_noise(dom);
    const auto k = GaussianKernel::isotropic(2, 2.0);
    const Vec x = vec({2.7, 14.2});
    const auto G = christoffel(src, k, x);
    const double h = 1e-5;
    for (int kk = 0; kk < 2; ++kk) {
      Vec xp = x, xm = x;
      xp[kk] += h;
      xm[kk] -= h;
      const Mat dL = (metric(src, k, xp) - metric(src, k, xm)) / (2 * h);
      for (int d = 0; d < 2; ++d)
        for (int e = 0; e < 2; ++e) {
          const double lhs = G(kk, d, e) + G(kk, e, d);
          CHECK(lhs == doctest::Approx(dL(d, e)).epsilon(1e-6).scale(1e-3));
        }
    }
  }

  TEST_CASE("ensemble metric matches the finite-difference oracle") {
    const auto dom = make_domain_preset("nonstat2d", 2.0).data_domain;
    const auto e = std::make_shared<const FieldEnsemble>(sample_ensemble(dom, 12, RngSpec{21, 0}));
    const auto k = GaussianKernel::isotropic(2, 2.0);
    const SurfSpec spec(e, k);
    const auto src = GeometrySource::ensemble(e);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.5, 20.5);
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
      const Vec x = vec({u(rng), u(rng)});
      const Mat L = metric(src, k, x);
      const Mat F = fd_metric(spec, x, 1e-4);
      CHECK((L - L.transpose()).norm() == 0.0);
      worst = std::max(worst, (L - F).norm() / L.norm());
    }
    CHECK(worst < 1e-3);
  }

  TEST_CASE("large ensembles approach the white-noise metric") {
    const auto dom = testutil::box(2, 1, 12);
    const auto k = GaussianKernel::isotropic(2, 3.0);
    const auto e = std::make_shared<const FieldEnsemble>(sample_ensemble(dom, 20000, RngSpec{5, 0}));
    const Vec x = vec({2.2, 6.4});
    const Mat W = metric(GeometrySource::white_noise(dom), k, x);
    const Mat E = metric(GeometrySource::ensemble(e), k, x);
    CHECK((E - W).norm() / W.norm() < 0.05);
    const Eigen::SelfAdjointEigenSolver<Mat> es(E);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }

  TEST_CASE("white-noise metric is translation invariant") {
    const auto a = make_domain_preset("nonstat2d", 2.0).data_domain;
    std::vector<double> c(a->coords().begin(), a->coords().end());
    for (std::size_t i = 0; i < c.size(); i += 2) {
      c[i] += 13.0;
      c[i + 1] -= 4.0;
    }
    auto b = std::make_shared<const VoxelSet>(2, c);
    const auto k = GaussianKernel::isotropic(2, 2.0);
    const Mat La = metric(GeometrySource::white_noise(a), k, vec({3.1, 7.7}));
    const Mat Lb = metric(GeometrySource::white_noise(b), k, vec({16.1, 3.7}));
    CHECK((La - Lb).norm() < 1e-12 * La.norm());
  }

  TEST_CASE("orthonormal frame examples") {
    const Mat I = Mat::Identity(3, 3);
    auto f = orthonormal_frame(I, 0, 1);
    CHECK((f.U - vec({1, 0, 0})).norm() < 1e-15);
    CHECK((f.V - vec({0, -1, 0})).norm() < 1e-15);
    CHECK((f.N - vec({0, 0, 1})).norm() < 1e-15);

    Mat D = I;
    D(0, 0) = 4.0;
    f = orthonormal_frame(D, 0, 1);
    CHECK((f.U - vec({0.5, 0, 0})).norm() < 1e-15);
    CHECK((f.V - vec({0, -1, 0})).norm() < 1e-15);
    CHECK((f.N - vec({0, 0, 1})).norm() < 1e-15);
  }

  TEST_CASE("orthonormal frame relations for random metrics") {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 200; ++t) {
      const Mat L = testutil::random_spd(3, rng);
      for (auto [k, l] : {std::pair{0, 1}, std::pair{0, 2}, std::pair{1, 2}}) {
        const auto f = orthonormal_frame(L, k, l);
        const double s = L.norm();
        CHECK(std::abs(f.U.dot(L * f.U) - 1) < 1e-12 * s);
        CHECK(std::abs(f.V.dot(L * f.V) - 1) < 1e-12 * s);
        CHECK(std::abs(f.N.dot(L * f.N) - 1) < 1e-12 * s);
        CHECK(std::abs(f.U.dot(L * f.V)) < 1e-12 * s);
        CHECK(std::abs(f.U.dot(L * f.N)) < 1e-12 * s);
        CHECK(std::abs(f.V.dot(L * f.N)) < 1e-12 * s);
        const int m = 3 - k - l;
        CHECK(f.U[m] == 0.0);
        CHECK(f.V[m] == 0.0);
        // N is proportional to Lambda^{-1} e_m
        const Vec n = L.inverse().col(m);
        CHECK((f.N.normalized() - n.normalized()).norm() < 1e-10);
      }
    }
    Mat singular = Mat::Zero(3, 3);
    singular(0, 0) = 1.0;
    CHECK_THROWS_AS(orthonormal_frame(singular, 0, 1), DegenerateError);
  }

  TEST_CASE("opening angles for the identity metric") {
    const Mat I = Mat::Identity(3, 3);
    for (int k = 0; k < 3; ++k) {
      CHECK(theta_angle(I, k, EdgeType::convex) == doctest::Approx(kPi / 2).epsilon(1e-14));
      CHECK(theta_angle(I, k, EdgeType::double_convex) == doctest::Approx(-kPi).epsilon(1e-14));
      CHECK(theta_angle(I, k, EdgeType::concave) == doctest::Approx(-kPi / 2).epsilon(1e-14));
    }
    // a scaled identity changes nothing
    for (auto t : {EdgeType::convex, EdgeType::double_convex, EdgeType::concave})
      CHECK(theta_angle(7.5 * I, 1, t) == doctest::Approx(theta_angle(I, 1, t)).epsilon(1e-14));
  }

  TEST_CASE("cube consistency: edge integral of a constant metric is the side sum") {
    // metric c^2 I on a box of side a: (1/2pi) * 12 edges * (pi/2) * (a c) = 3 a c
    const double c = 1.7, a = 2.0;
    const Mat L = c * c * Mat::Identity(3, 3);
    double total = 0.0;
    for (int k = 0; k < 3; ++k)
      for (int e = 0; e < 4; ++e) total += theta_angle(L, k, EdgeType::convex) * a * std::sqrt(L(k, k));
    CHECK(total / (2 * kPi) == doctest::Approx(3 * a * c).epsilon(1e-14));
  }

  TEST_CASE("clipped square-root determinant") {
    Mat m(2, 2);
    m << 4.0, 0.0, 0.0, 9.0;
    bool clipped = true;
    CHECK(sqrt_det_clipped(m, &clipped) == doctest::Approx(6.0).epsilon(1e-15));
    CHECK_FALSE(clipped);
    m << 1.0, 1.0, 1.0, 1.0 - 1e-9;  // tiny negative eigenvalue
    CHECK(sqrt_det_clipped(m, &clipped) == doctest::Approx(std::sqrt(2.0 * 1e-12)).epsilon(1e-6));
    CHECK(clipped);
  }

  TEST_CASE("metric field on a grid matches pointwise evaluation") {
    const auto p = make_domain_preset("nonstat2d", 2.0);
    const VoxelManifold m(p.manifold_domain);
    const auto g = refined_grid(m, 1);
    const auto k = GaussianKernel::isotropic(2, 2.0);
    const auto e = std::make_shared<const FieldEnsemble>(sample_ensemble(p.data_domain, 10, RngSpec{3, 0}));
    for (const auto& src : {GeometrySource::white_noise(p.data_domain), GeometrySource::ensemble(e)}) {
      const auto F = metric_field(src, k, g, Parallelism{3});
      REQUIRE(F.size() == g.size());
      for (std::size_t i = 0; i < g.size(); i += 37) {
        const Mat L = metric(src, k, g.point(i));
        CHECK((F.at(i) - L).norm() < 1e-9 * L.norm());
      }
    }
  }
}
