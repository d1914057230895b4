#include "surfield/fwer.hpp"

#include <algorithm>
#include <cmath>

#include "surfield/error.hpp"
#include "surfield/geometry.hpp"

namespace surfield {

namespace {

struct Shared {
  DomainPreset preset;
  GaussianKernel kernel;
  VoxelManifold manifold;
  RefinedGrid scan;
  RefinedGrid voxels;
  std::vector<std::size_t> voxel_to_scan;  // voxel-grid point -> scan-grid point
};

ReplicationResult run_replication(const FwerConfig& cfg, const Shared& sh, std::size_t b) {
  ReplicationResult rep;
  rep.index = b;
  auto ens = std::make_shared<const FieldEnsemble>(
      sample_ensemble(sh.preset.data_domain, cfg.n_subjects, RngSpec{cfg.seed, b}));
  const SurfSpec spec(ens, sh.kernel);
  const GeometrySource source = GeometrySource::ensemble(ens);

  std::vector<double> t1;
  if (cfg.r_lkc == cfg.r_scan && SeparableEvaluator::supports(ens->domain(), sh.kernel)) {
    const JetMoments mom = ensemble_moments(*ens, sh.kernel, sh.scan.product_grid(), sh.scan.dense_indices(),
                                            Order::gradient);
    rep.lkc = lkc_from_metric_field(sh.manifold, sh.scan, metric_field_from_moments(mom, sh.scan));
    t1 = t_values_from_moments(mom);
  } else {
    rep.lkc = lkc_compute(source, sh.kernel, sh.manifold, cfg.r_lkc);
    t1 = t_field_on_grid(spec, sh.scan);
  }
  rep.threshold = threshold(rep.lkc, FieldType::student_t(static_cast<double>(cfg.n_subjects - 1)), cfg.alpha);
  const double u = rep.threshold;

  std::vector<double> t0(sh.voxels.size());
  for (std::size_t p = 0; p < t0.size(); ++p) t0[p] = t1[sh.voxel_to_scan[p]];
  rep.max[0] = *std::max_element(t0.begin(), t0.end());
  rep.max[1] = *std::max_element(t1.begin(), t1.end());
  rep.maxima_above[0] = count_local_maxima_above(sh.voxels, t0, u);
  rep.maxima_above[1] = count_local_maxima_above(sh.scan, t1, u);

  MaximizeOptions opt;
  opt.starts = cfg.starts;
  const MaximizeResult mx = maximize_t_field(spec, sh.manifold, sh.scan, t1, opt);
  rep.max[2] = mx.value;
  rep.maxima_above[2] = static_cast<std::size_t>(
      std::count_if(mx.maxima_values.begin(), mx.maxima_values.end(), [&](double t) { return t > u; }));
  rep.ok = true;
  return rep;
}

}  // namespace

FwerReport fwer_experiment(const FwerConfig& cfg, Parallelism par) {
  if (cfg.n_reps < 1) throw InvalidArgument("fwer_experiment: n_reps must be at least 1");
  if (cfg.n_subjects < 2) throw InvalidArgument("fwer_experiment: n_subjects must be at least 2");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw InvalidArgument("fwer_experiment: alpha must lie in (0, 1)");
  if (cfg.r_scan < 1 || cfg.r_scan % 2 == 0) throw InvalidArgument("fwer_experiment: r_scan must be odd and positive");
  if (cfg.r_lkc < 1 || cfg.r_lkc % 2 == 0) throw InvalidArgument("fwer_experiment: r_lkc must be odd and positive");
  if (cfg.starts < 1) throw InvalidArgument("fwer_experiment: starts must be at least 1");

  DomainPreset preset = make_domain_preset(cfg.preset, cfg.fwhm);
  GaussianKernel kernel = GaussianKernel::isotropic(preset.data_domain->dim(), cfg.fwhm);
  VoxelManifold manifold(preset.manifold_domain);
  RefinedGrid scan = refined_grid(manifold, cfg.r_scan);
  RefinedGrid voxels = refined_grid(manifold, 0);
  std::vector<std::size_t> v2s(voxels.size());
  for (std::size_t v = 0; v < manifold.domain().size(); ++v) v2s[voxels.voxel_centre(v)] = scan.voxel_centre(v);
  const Shared sh{std::move(preset), std::move(kernel), std::move(manifold), std::move(scan), std::move(voxels),
                  std::move(v2s)};

  FwerReport report;
  report.config = cfg;
  report.replications.resize(cfg.n_reps);
  parallel_for(cfg.n_reps, par, [&](std::size_t begin, std::size_t end) {
    for (std::size_t b = begin; b < end; ++b) {
      try {
        report.replications[b] = run_replication(cfg, sh, b);
      } catch (const std::exception& e) {
        report.replications[b] = ReplicationResult{};
        report.replications[b].index = b;
        report.replications[b].error = e.what();
      }
    }
  });

  report.modes[0].mode = "0";
  report.modes[1].mode = std::to_string(cfg.r_scan);
  report.modes[2].mode = "inf";
  std::array<double, 3> maxima_sum{0.0, 0.0, 0.0};
  for (const auto& rep : report.replications) {
    if (!rep.ok) {
      ++report.failures;
      continue;
    }
    ++report.completed;
    for (int m = 0; m < 3; ++m) {
      if (rep.max[m] > rep.threshold) ++report.modes[m].exceedances;
      maxima_sum[m] += static_cast<double>(rep.maxima_above[m]);
    }
  }
  if (report.completed > 0) {
    const double B = static_cast<double>(report.completed);
    for (int m = 0; m < 3; ++m) {
      auto& mode = report.modes[m];
      mode.fwer = static_cast<double>(mode.exceedances) / B;
      mode.se = std::sqrt(mode.fwer * (1.0 - mode.fwer) / B);
      mode.eec = maxima_sum[m] / B;
    }
  }
  return report;
}

}  // namespace surfield
