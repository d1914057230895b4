#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "surfield/inference.hpp"
#include "surfield/lkc.hpp"
#include "surfield/parallel.hpp"

namespace surfield {

struct FwerConfig {
  std::string preset = "stat2d";
  double fwhm = 3.0;
  std::size_t n_subjects = 50;
  std::size_t n_reps = 500;
  double alpha = 0.05;
  int r_scan = 1;
  int r_lkc = 1;
  std::uint64_t seed = 1;
  std::size_t starts = 10;
};

/// One resolution mode: r = 0 (voxels), r = r_scan (refined grid) or r = infinity (continuous).
struct FwerModeResult {
  std::string mode;
  std::size_t exceedances = 0;
  double fwer = 0.0;
  double se = 0.0;   // binomial standard error
  double eec = 0.0;  // mean number of local maxima above the threshold
};

struct ReplicationResult {
  std::size_t index = 0;
  bool ok = false;
  std::string error;
  double threshold = 0.0;
  LkcVector lkc;
  std::array<double, 3> max{0.0, 0.0, 0.0};
  std::array<std::size_t, 3> maxima_above{0, 0, 0};
};

struct FwerReport {
  FwerConfig config;
  std::array<FwerModeResult, 3> modes;
  std::size_t completed = 0;
  std::size_t failures = 0;
  std::vector<ReplicationResult> replications;
};

/// Null-data simulation: per replication sample N fields, estimate LKCs, solve the t
/// threshold at alpha and compare the maxima of the t-field over the voxels, the scan grid
/// and the continuous manifold with it.
FwerReport fwer_experiment(const FwerConfig& config, Parallelism par = {});

}  // namespace surfield
