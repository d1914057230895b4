#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "surfield/error.hpp"
#include "surfield/lattice.hpp"
#include "test_util.hpp"

using namespace surfield;

namespace {

// Brute-force enumeration of the six simulation sets straight from their set definitions.
std::size_t brute_count(const std::string& name, double fwhm, std::optional<double> a_override = std::nullopt) {
  const double a = a_override.value_or(std::sqrt(2.0) * fwhm / std::sqrt(std::log(2.0)));
  auto in_stat = [&](double x, double L) { return x >= 1.0 - a && x <= L + a; };
  std::size_t n = 0;
  if (name == "stat1d") {
    for (int x = -200; x <= 300; ++x) n += in_stat(x, 100);
  } else if (name == "stat2d") {
    for (int x = -100; x <= 100; ++x)
      for (int y = -100; y <= 100; ++y) n += in_stat(x, 20) && in_stat(y, 20);
  } else if (name == "stat3d") {
    for (int x = -40; x <= 60; ++x)
      for (int y = -40; y <= 60; ++y)
        for (int z = -40; z <= 60; ++z) n += in_stat(x, 20) && in_stat(y, 20) && in_stat(z, 20);
  } else if (name == "nonstat1d") {
    const std::set<int> out = {2, 4, 8, 9, 11, 15, 20, 21, 22, 40, 41, 42, 43, 44, 45, 60, 62, 64, 65, 98, 99, 100};
    for (int x = 1; x <= 100; ++x) n += !out.count(x);
  } else {
    const int D = name == "nonstat2d" ? 2 : 3;
    auto rim = [](int c) { return c == 1 || c == 2 || c == 19 || c == 20; };
    for (int x = 1; x <= 20; ++x)
      for (int y = 1; y <= 20; ++y)
        for (int z = 1; z <= (D == 3 ? 20 : 1); ++z) n += rim(x) || rim(y) || (D == 3 && rim(z));
  }
  return n;
}

}  // namespace

TEST_SUITE("lattice") {
  TEST_CASE("voxel set spacing is the minimum positive gap and recomputes to itself") {
    VoxelSet s(2, {0.0, 0.0, 0.5, 0.0, 1.5, 3.0, 0.0, 3.0});
    CHECK(s.spacing()[0] == doctest::Approx(0.5));
    CHECK(s.spacing()[1] == doctest::Approx(3.0));
    const Vec again = VoxelSet::compute_spacing(2, s.coords());
    CHECK(again == s.spacing());
    VoxelSet line(1, {7.0});
    CHECK(line.spacing()[0] == 1.0);
  }

  TEST_CASE("voxel set rejects duplicates and bad dimensions") {
    CHECK_THROWS_AS(VoxelSet(2, {0.0, 0.0, 0.0, 0.0}), InvalidArgument);
    CHECK_THROWS_AS(VoxelSet(4, {0.0, 0.0, 0.0, 0.0}), InvalidArgument);
    CHECK_THROWS_AS(VoxelSet(1, {}), InvalidArgument);
  }

  TEST_CASE("lattice embedding of aligned coordinates") {
    VoxelSet s(2, {2.0, 4.0, 4.0, 4.0, 2.0, 7.0});
    REQUIRE(s.lattice() != nullptr);
    const auto& lat = *s.lattice();
    CHECK(lat.extent[0] == 2);
    CHECK(lat.extent[1] == 2);
    CHECK(lat.find({1, 0, 0}).value() == 1);
    CHECK_FALSE(lat.occupied({1, 1, 0}));
    CHECK_FALSE(lat.occupied({5, 0, 0}));
    VoxelSet skew(1, {0.0, 1.0, 2.5});
    CHECK(skew.lattice() == nullptr);
  }

  TEST_CASE("preset voxel counts match brute-force enumeration") {
    for (auto name : kPresetNames) {
      for (double f : {1.0, 2.5, 3.0}) {
        const auto p = make_domain_preset(name, f);
        CAPTURE(std::string(name));
        CAPTURE(f);
        CHECK(p.data_domain->size() == brute_count(std::string(name), f));
      }
    }
  }

  TEST_CASE("preset examples") {
    const auto s = make_domain_preset("stat2d", 3.0, 0.0);
    CHECK(s.data_domain->size() == 400);
    for (std::size_t v = 0; v < s.data_domain->size(); ++v) {
      for (int d = 0; d < 2; ++d) {
        CHECK(s.data_domain->coord(v, d) >= 1.0);
        CHECK(s.data_domain->coord(v, d) <= 20.0);
      }
    }
    CHECK(make_domain_preset("nonstat2d", 3.0).data_domain->size() == 144);
    CHECK(make_domain_preset("nonstat1d", 3.0).data_domain->size() == 78);
    const auto st = make_domain_preset("stat3d", 2.0);
    CHECK(st.manifold_domain->size() == 8000);
    CHECK(st.expansion == doctest::Approx(std::sqrt(2.0) * 2.0 / std::sqrt(std::log(2.0))));
    CHECK_THROWS_AS(make_domain_preset("stat4d", 3.0), InvalidArgument);
  }

  TEST_CASE("sampling is a pure function of the rng spec") {
    const auto dom = testutil::box(2, 1, 6);
    const auto a = sample_ensemble(dom, 5, RngSpec{42, 3});
    const auto b = sample_ensemble(dom, 5, RngSpec{42, 3});
    const auto c = sample_ensemble(dom, 5, RngSpec{42, 4});
    CHECK(std::equal(a.voxel_major().begin(), a.voxel_major().end(), b.voxel_major().begin()));
    CHECK_FALSE(std::equal(a.voxel_major().begin(), a.voxel_major().end(), c.voxel_major().begin()));
    CHECK(RngSpec{42, 3}.derived_seed() != RngSpec{43, 3}.derived_seed());
  }

  TEST_CASE("sampled noise has unit variance and the requested mean") {
    const auto dom = testutil::box(1, 1, 100);
    for (double mu : {0.0, 5.0}) {
      const auto e = sample_ensemble(dom, 10000, RngSpec{7, 0}, std::vector<double>(100, mu));
      double s = 0.0, s2 = 0.0;
      for (double x : e.voxel_major()) {
        s += x - mu;
        s2 += (x - mu) * (x - mu);
      }
      const double n = static_cast<double>(e.voxel_major().size());
      CHECK(std::abs(s / n) < 4.0 / std::sqrt(n));
      CHECK(std::abs(s2 / n - 1.0) < 0.01);
    }
    CHECK_THROWS_AS(sample_ensemble(dom, 3, RngSpec{}, std::vector<double>(5, 0.0)), InvalidArgument);
  }

  TEST_CASE("srf1 round trip and header layout") {
    const auto dom = testutil::box(3, 0, 2);
    const auto e = sample_ensemble(dom, 3, RngSpec{1, 1});
    const auto bytes = encode_srf1(e);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "SRF1");
    CHECK(bytes[4] == 1);
    CHECK(bytes[5] == 0);
    CHECK(bytes[6] == 3);
    const std::size_t expect = 4 + 2 + 1 + 8 + 27 * 3 * 8 + 4 + 27 * 3 * 8;
    CHECK(bytes.size() == expect);
    const auto back = decode_srf1(bytes);
    CHECK(back.n_fields() == 3);
    CHECK(std::equal(back.voxel_major().begin(), back.voxel_major().end(), e.voxel_major().begin()));
    CHECK(std::equal(back.domain().coords().begin(), back.domain().coords().end(), dom->coords().begin()));

    auto truncated = bytes;
    truncated.resize(bytes.size() - 3);
    CHECK_THROWS_AS(decode_srf1(truncated), FormatError);
    auto bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(decode_srf1(bad), FormatError);
  }

  TEST_CASE("srf1 single field without count block") {
    const auto dom = testutil::box(1, 0, 3);
    const auto e = sample_ensemble(dom, 1, RngSpec{1, 1});
    auto bytes = encode_srf1(e);
    // drop the u32 field count: a lone field follows the coordinates directly
    const std::size_t at = 4 + 2 + 1 + 8 + 4 * 8;
    bytes.erase(bytes.begin() + static_cast<std::ptrdiff_t>(at), bytes.begin() + static_cast<std::ptrdiff_t>(at + 4));
    const auto back = decode_srf1(bytes);
    CHECK(back.n_fields() == 1);
    CHECK(back.value(2, 0) == e.value(2, 0));
  }

  TEST_CASE("csv round trip and diagnostics") {
    const auto dir = std::filesystem::temp_directory_path() / "surfield_lattice_test";
    std::filesystem::create_directories(dir);
    const auto dom = testutil::box(2, 1, 3);
    const auto e = sample_ensemble(dom, 2, RngSpec{9, 0});
    const auto path = (dir / "e.csv").string();
    write_csv(path, e);
    const auto back = read_csv(path);
    CHECK(back.n_fields() == 2);
    for (std::size_t i = 0; i < e.voxel_major().size(); ++i) CHECK(back.voxel_major()[i] == e.voxel_major()[i]);

    const auto bad = (dir / "bad.csv").string();
    {
      std::ofstream f(bad);
      f << "x1,value\n1,0.5\n2,abc\n";
    }
    try {
      read_csv(bad);
      FAIL("expected a format error");
    } catch (const FormatError& err) {
      CHECK(std::string(err.what()).find("bad.csv:3: column 2") != std::string::npos);
    }
  }
}
