#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "surfield/fwer.hpp"

namespace surfield {

/// fwer-sim run description. fwhm and n_subjects may list several values; the run sweeps
/// their product.
struct RunConfig {
  std::string preset = "stat2d";
  std::vector<double> fwhm{3.0};
  std::vector<std::size_t> n_subjects{50};
  std::size_t n_reps = 500;
  double alpha = 0.05;
  int r_scan = 1;
  int r_lkc = 1;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::size_t starts = 10;

  /// One experiment per (fwhm, n_subjects) pair, fwhm-major.
  std::vector<FwerConfig> experiments() const;
};

/// Parses a JSON config; errors name the offending line and field.
RunConfig parse_run_config(const std::string& text, const std::string& source_name = "config");
RunConfig load_run_config(const std::string& path);

nlohmann::ordered_json to_json(const RunConfig& cfg);
nlohmann::ordered_json to_json(const FwerConfig& cfg);
nlohmann::ordered_json to_json(const LkcVector& lkc);
nlohmann::ordered_json to_json(const FwerReport& report, bool with_replications = false);

/// "<version> (<git describe>)" of this build.
std::string version_string();

}  // namespace surfield
