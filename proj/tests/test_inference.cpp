#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "surfield/error.hpp"
#include "surfield/fwer.hpp"
#include "surfield/inference.hpp"
#include "test_util.hpp"

using namespace surfield;
using testutil::vec;

namespace {

LkcVector lkc_of(std::initializer_list<double> L) {
  LkcVector v;
  v.dim = static_cast<int>(L.size()) - 1;
  int d = 0;
  for (double x : L) v.L[d++] = x;
  return v;
}

// Grid over [0, n) x [0, n) at unit spacing.
RefinedGrid square_grid(int n) {
  std::vector<Index3> idx;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) idx.push_back({x, y, 0});
  return refined_grid(VoxelManifold(testutil::voxels(2, idx)), 0);
}

std::vector<double> bumps(const RefinedGrid& g, std::vector<std::pair<Vec, double>> centres) {
  std::vector<double> v(g.size());
  for (std::size_t p = 0; p < g.size(); ++p) {
    for (const auto& [c, h] : centres) v[p] += h * std::exp(-(g.point(p) - c).squaredNorm() / 4.0);
  }
  return v;
}

}  // namespace

TEST_SUITE("inference") {
  TEST_CASE("Gaussian EC densities") {
    const auto G = FieldType::gaussian();
    CHECK(ec_density(G, 0, 1.6449) == doctest::Approx(0.05).epsilon(1e-4));
    CHECK(ec_density(G, 1, 0.0) == doctest::Approx(1 / (2 * std::numbers::pi)).epsilon(1e-15));
    CHECK(ec_density(G, 1, 0.0) == doctest::Approx(0.159155).epsilon(1e-6));
    // reference values from closed forms evaluated at 30 digits
    const double ref[] = {0.0062096653257761352, 0.0069927801704657902, 0.0069742891688788537,
                          0.0058429115329442393};
    for (int d = 0; d < 4; ++d) CHECK(ec_density(G, d, 2.5) == doctest::Approx(ref[d]).epsilon(1e-13));
    CHECK_THROWS_AS(ec_density(G, 4, 1.0), InvalidArgument);
  }

  TEST_CASE("Student t EC densities") {
    const auto T = FieldType::student_t(20);
    const double ref[] = {0.0035379493956055482, 0.0046647042118269809, 0.0055135206455396253,
                          0.0056052010369725496};
    for (int d = 0; d < 4; ++d) CHECK(ec_density(T, d, 3.0) == doctest::Approx(ref[d]).epsilon(1e-12));
    // upper 5% point of t(10)
    CHECK(ec_density(FieldType::student_t(10), 0, 1.8124611228116764) == doctest::Approx(0.05).epsilon(1e-12));
    // large degrees of freedom approach the Gaussian densities
    const auto big = FieldType::student_t(1e7);
    for (int d = 0; d < 4; ++d)
      for (double u : {1.0, 2.5, 4.0})
        CHECK(ec_density(big, d, u) == doctest::Approx(ec_density(FieldType::gaussian(), d, u)).epsilon(1e-5));
    CHECK_THROWS_AS(FieldType::student_t(0.5), InvalidArgument);
  }

  TEST_CASE("threshold examples") {
    const auto G = FieldType::gaussian();
    CHECK(threshold(lkc_of({1}), G, 0.025) == doctest::Approx(1.959964).epsilon(1e-6));
    const auto L = lkc_of({1, 55.50});
    const double u = threshold(L, G, 0.05);
    CHECK(u == doctest::Approx(3.2209003208296757).epsilon(1e-10));
    // independent scan: the last grid point with EEC >= alpha brackets the root
    double last = 0.0;
    for (double x = 0.0; x <= 10.0; x += 1e-5) {
      const double eec = 0.5 * std::erfc(x / std::sqrt(2.0)) + 55.50 * std::exp(-x * x / 2) / (2 * std::numbers::pi);
      if (eec >= 0.05) last = x;
    }
    CHECK(std::abs(u - last) < 2e-5);
    CHECK(threshold(L, G, 0.01) > u);
    CHECK(threshold(L, G, 0.1) < u);
  }

  TEST_CASE("threshold round trip") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> s(0.0, 1.0);
    for (int t = 0; t < 100; ++t) {
      const auto L = lkc_of({1, 100 * s(rng), 1000 * s(rng), 5000 * s(rng)});
      const FieldType type = t % 2 ? FieldType::gaussian() : FieldType::student_t(5 + 100 * s(rng));
      for (double a : {0.01, 0.05, 0.1}) {
        const double u = threshold(L, type, a);
        CHECK(std::abs(expected_ec(L, type, u) - a) < 1e-7);
      }
    }
  }

  TEST_CASE("threshold failures are explicit") {
    CHECK_THROWS_AS(threshold(lkc_of({0.5}), FieldType::gaussian(), 0.9), NoRootError);
    CHECK_THROWS_AS(threshold(lkc_of({1, -50}), FieldType::gaussian(), 0.05), NoRootError);
    CHECK_THROWS_AS(threshold(lkc_of({1}), FieldType::gaussian(), 1.5), InvalidArgument);
  }

  TEST_CASE("local maxima counting") {
    const auto g = square_grid(30);
    CHECK(count_local_maxima_above(g, bumps(g, {{vec({10.2, 12.7}), 5.0}}), 1.0) == 1);
    const auto two = bumps(g, {{vec({5.0, 5.0}), 5.0}, {vec({24.0, 22.0}), 4.0}});
    CHECK(count_local_maxima_above(g, two, 1.0) == 2);
    CHECK(count_local_maxima_above(g, two, 4.5) == 1);
    CHECK(count_local_maxima_above(g, two, 10.0) == 0);
    const auto order = local_maxima(g, two);
    REQUIRE(order.size() >= 2);
    CHECK(two[order[0]] >= two[order[1]]);

    // a flat plateau above u counts once
    std::vector<double> flat(g.size(), 0.0);
    for (std::size_t p = 0; p < g.size(); ++p) {
      const Vec x = g.point(p);
      if (x[0] >= 3 && x[0] <= 6 && x[1] >= 3 && x[1] <= 4) flat[p] = 2.0;
    }
    CHECK(count_local_maxima_above(g, flat, 1.0) == 1);
  }

  TEST_CASE("continuous maximization finds the smoothed bump maximizer") {
    // fields X_i = bump + eps_i (constant per field): the t-field is an increasing function of
    // B~(x) / sum_v K(x, v), whose maximizer is found by a dense search
    const auto dom = testutil::box(2, 1, 10);
    const Vec centre = vec({5.3, 4.7});
    const double f = 2.0;
    const auto k = GaussianKernel::isotropic(2, f);
    std::vector<double> bump(dom->size());
    for (std::size_t v = 0; v < dom->size(); ++v) bump[v] = std::exp(-(dom->point(v) - centre).squaredNorm() / 3.0);
    const std::vector<double> eps{-0.2, 0.1, 0.35, -0.05};
    std::vector<double> data;
    for (std::size_t v = 0; v < dom->size(); ++v)
      for (double e : eps) data.push_back(bump[v] + e);
    const auto ens = std::make_shared<const FieldEnsemble>(dom, eps.size(), data);
    const SurfSpec spec(ens, k);
    const VoxelManifold m(dom);
    const auto res = maximize_t_field(spec, m, 1);
    CHECK(res.value >= res.grid_max);
    CHECK(m.contains(res.argmax));

    auto ratio = [&](double x, double y) {
      double num = 0.0, den = 0.0;
      for (std::size_t v = 0; v < dom->size(); ++v) {
        const double dx = x - dom->coord(v, 0), dy = y - dom->coord(v, 1);
        const double w = std::exp(-4 * std::log(2.0) * (dx * dx + dy * dy) / (f * f));
        num += w * bump[v];
        den += w;
      }
      return num / den;
    };
    double bx = 0, by = 0, best = -1;
    auto search = [&](double cx, double cy, double half, double step) {
      for (double x = cx - half; x <= cx + half + 1e-12; x += step)
        for (double y = cy - half; y <= cy + half + 1e-12; y += step) {
          const double r = ratio(x, y);
          if (r > best) {
            best = r;
            bx = x;
            by = y;
          }
        }
    };
    search(5.5, 5.5, 5.0, 0.01);
    search(bx, by, 0.02, 1e-3);
    search(bx, by, 2e-3, 1e-5);
    CHECK(std::abs(res.argmax[0] - bx) < 1e-4);
    CHECK(std::abs(res.argmax[1] - by) < 1e-4);

    // scaling every field leaves the result unchanged
    const auto scaled = std::make_shared<const FieldEnsemble>(ens->scaled(4.0));
    const auto res2 = maximize_t_field(SurfSpec(scaled, k), m, 1);
    CHECK((res2.argmax - res.argmax).norm() < 1e-7);
    CHECK(res2.value == doctest::Approx(res.value).epsilon(1e-9));
  }

  TEST_CASE("maximization beats the scan grid on random data") {
    const auto p = make_domain_preset("nonstat2d", 2.0);
    const VoxelManifold m(p.manifold_domain);
    for (std::uint64_t s = 0; s < 5; ++s) {
      const auto e = std::make_shared<const FieldEnsemble>(sample_ensemble(p.data_domain, 10, RngSpec{s, 0}));
      const auto res = maximize_t_field(SurfSpec(e, GaussianKernel::isotropic(2, 2.0)), m, 1);
      CHECK(res.value >= res.grid_max);
      CHECK(m.contains(res.argmax, 1e-9));
      for (std::size_t i = 1; i < res.maxima_values.size(); ++i) CHECK(res.maxima_values[i - 1] >= res.maxima_values[i]);
    }
  }

  TEST_CASE("localization support") {
    const auto dom = testutil::box(2, 0, 9);
    const Vec x = vec({4.3, 5.6});
    CHECK(localization_support(GaussianKernel::isotropic(2, 3.0), *dom, x).size() == dom->size());
    const auto sup = localization_support(GaussianKernel::isotropic(2, 3.0, 2.0), *dom, x);
    std::vector<std::size_t> brute;
    for (std::size_t v = 0; v < dom->size(); ++v)
      if ((dom->point(v) - x).norm() <= 2.0) brute.push_back(v);
    CHECK(sup == brute);

    // a rejection at x with positive smoothed signal needs a positive signal voxel in the support
    const auto k = GaussianKernel::isotropic(2, 3.0, 2.0);
    std::vector<double> mu(dom->size(), 0.0);
    mu[dom->lattice()->find({8, 8, 0}).value()] = 1.0;
    for (double px = 0.0; px <= 9.0; px += 0.5)
      for (double py = 0.0; py <= 9.0; py += 0.5) {
        const Vec y = vec({px, py});
        double smooth = 0.0;
        for (std::size_t v = 0; v < dom->size(); ++v) smooth += k.value(y, dom->point(v)) * mu[v];
        bool hit = false;
        for (auto v : localization_support(k, *dom, y)) hit |= mu[v] > 0.0;
        CHECK(hit == (smooth > 0.0));
      }
  }

  TEST_CASE("non-degeneracy ranks") {
    const auto k1 = GaussianKernel::isotropic(1, 2.0);
    const auto three = testutil::voxels(1, {{4, 0, 0}, {5, 0, 0}, {6, 0, 0}});
    const auto r1 = nondegeneracy_check(k1, *three, vec({5.1}));
    CHECK(r1.rank == 3);
    CHECK(r1.required == 3);
    CHECK(r1.pass);
    const auto one = testutil::voxels(1, {{5, 0, 0}});
    const auto r0 = nondegeneracy_check(k1, *one, vec({5.1}));
    CHECK(r0.rank == 1);
    CHECK_FALSE(r0.pass);
    const auto nine = testutil::box(2, 0, 2);
    const auto r2 = nondegeneracy_check(GaussianKernel::isotropic(2, 2.0), *nine, vec({1.2, 0.9}));
    CHECK(r2.rank == 6);
    CHECK(r2.required == 6);
    CHECK(r2.pass);
  }

  TEST_CASE("small FWER run: nesting, accounting and determinism") {
    FwerConfig c;
    c.preset = "nonstat2d";
    c.fwhm = 2.0;
    c.n_subjects = 12;
    c.n_reps = 16;
    c.seed = 99;
    c.starts = 3;
    const auto a = fwer_experiment(c, Parallelism{1});
    const auto b = fwer_experiment(c, Parallelism{3});
    CHECK(a.failures == 0);
    CHECK(a.completed == 16);
    for (std::size_t i = 0; i < a.replications.size(); ++i) {
      const auto& r = a.replications[i];
      CHECK(r.max[0] <= r.max[1]);
      CHECK(r.max[1] <= r.max[2]);
      CHECK(r.threshold == b.replications[i].threshold);
      CHECK(r.max == b.replications[i].max);
    }
    for (int m = 0; m < 3; ++m) {
      CHECK(a.modes[m].exceedances == b.modes[m].exceedances);
      CHECK(a.modes[m].eec == b.modes[m].eec);
    }
    CHECK(a.modes[0].fwer <= a.modes[1].fwer);
    CHECK(a.modes[1].fwer <= a.modes[2].fwer);
  }
}
