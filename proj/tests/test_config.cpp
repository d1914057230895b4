#include <doctest.h>

#include <string>

#include "surfield/config.hpp"
#include "surfield/error.hpp"

using namespace surfield;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_run_config(text, "run.json");
  } catch (const FormatError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("full config parses and expands into experiments") {
    const auto c = parse_run_config(R"({
      "preset": "stat3d",
      "fwhm": [1, 2.5],
      "n_subjects": [20, 50, 100],
      "n_reps": 40,
      "alpha": 0.1,
      "r_scan": 3,
      "r_lkc": 1,
      "seed": 12345678901,
      "threads": 4,
      "starts": 5
    })");
    CHECK(c.preset == "stat3d");
    CHECK(c.fwhm == std::vector<double>{1.0, 2.5});
    CHECK(c.n_subjects == std::vector<std::size_t>{20, 50, 100});
    CHECK(c.seed == 12345678901ull);
    CHECK(c.threads == 4);
    const auto ex = c.experiments();
    REQUIRE(ex.size() == 6);
    CHECK(ex[0].fwhm == 1.0);
    CHECK(ex[0].n_subjects == 20);
    CHECK(ex[5].fwhm == 2.5);
    CHECK(ex[5].n_subjects == 100);
    CHECK(ex[3].r_scan == 3);
    CHECK(ex[3].starts == 5);
  }

  TEST_CASE("defaults and scalar lists") {
    const auto c = parse_run_config(R"({"preset": "stat2d", "fwhm": 3, "n_subjects": 50, "n_reps": 500, "alpha": 0.05})");
    CHECK(c.fwhm == std::vector<double>{3.0});
    CHECK(c.r_scan == 1);
    CHECK(c.r_lkc == 1);
    CHECK(c.seed == 1);
    CHECK(c.threads == 1);
  }

  TEST_CASE("serialization round trip") {
    const auto c = parse_run_config(R"({"preset": "nonstat1d", "fwhm": [1.5], "n_subjects": [30], "n_reps": 7,
                                        "alpha": 0.05, "seed": 3, "r_scan": 5})");
    const auto text = to_json(c).dump();
    const auto back = parse_run_config(text);
    CHECK(to_json(back).dump() == text);
  }

  TEST_CASE("diagnostics name the line and the field") {
    CHECK(error_of("{\n\"preset\": \"stat2d\",\n\"fwhm\": [3],\n\"n_subjects\": 1,\n\"n_reps\": 5,\n\"alpha\": 0.05}")
              .find("run.json:4: field 'n_subjects'") != std::string::npos);
    CHECK(error_of("{\n\"preset\": \"stat9d\",\n\"fwhm\": 3,\n\"n_subjects\": 10,\n\"n_reps\": 5,\n\"alpha\": 0.05}")
              .find("run.json:2: field 'preset'") != std::string::npos);
    CHECK(error_of("{\"preset\": \"stat2d\", \"fwhm\": 3, \"n_subjects\": 10, \"n_reps\": 5, \"alpha\": 0.05,\n \"extra\": 1}")
              .find("run.json:2: field 'extra': unknown field") != std::string::npos);
    CHECK(error_of("{\"preset\": \"stat2d\", \"fwhm\": 3, \"n_subjects\": 10, \"n_reps\": 5, \"alpha\": 1.5}")
              .find("field 'alpha'") != std::string::npos);
    CHECK(error_of("{\"preset\": \"stat2d\", \"fwhm\": 3, \"n_subjects\": 10, \"n_reps\": 5, \"alpha\": 0.05, \"r_scan\": 2}")
              .find("field 'r_scan'") != std::string::npos);
    CHECK(error_of("{\"preset\": \"stat2d\", \"fwhm\": 3}").find("missing required field") != std::string::npos);
    CHECK(error_of("{\"preset\": \"stat2d\",\n\"fwhm\": [3,]}").find("run.json:2: malformed JSON") != std::string::npos);
    CHECK(error_of("{\"preset\": \"stat2d\", \"fwhm\": [], \"n_subjects\": 10, \"n_reps\": 5, \"alpha\": 0.05}")
              .find("field 'fwhm'") != std::string::npos);
  }

  TEST_CASE("version string names the build") {
    const auto v = version_string();
    CHECK(v.find('(') != std::string::npos);
  }
}
