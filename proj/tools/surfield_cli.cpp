// surfield: batch front end for LKC tables, thresholds and FWER simulations.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "surfield/config.hpp"
#include "surfield/error.hpp"
#include "surfield/fwer.hpp"
#include "surfield/inference.hpp"
#include "surfield/lattice.hpp"
#include "surfield/lkc.hpp"
#include "surfield/manifold.hpp"
#include "surfield/surf.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;
using namespace surfield;

namespace {

constexpr const char* kLkcSchema = "lkc/1";
constexpr const char* kThresholdSchema = "threshold/1";
constexpr const char* kFwerSchema = "fwer/1";
constexpr const char* kSurfSchema = "surf/1";

struct Global {
  std::string format = "csv";
  bool format_given = false;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::string out;
};

std::string num(double x) {
  std::ostringstream os;
  os << std::setprecision(12) << x;
  return os.str();
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

FieldEnsemble load_fields(const std::string& path) {
  if (ends_with(path, ".csv")) return read_csv(path);
  return read_srf1(path);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw Error("write failed for '" + path.string() + "'");
}

ojson manifest_head(const std::string& command) {
  ojson j;
  j["tool"] = "surfield";
  j["version"] = version_string();
  j["command"] = command;
  return j;
}

// Writes <out>/<stem>.csv and <stem>.json, or prints the requested format to stdout.
void emit(const Global& g, const std::string& stem, const std::string& csv, const ojson& manifest) {
  if (g.out.empty()) {
    if (g.format == "json")
      std::cout << manifest.dump(2) << '\n';
    else
      std::cout << csv;
    return;
  }
  const fs::path dir(g.out);
  write_text(dir / (stem + ".csv"), csv);
  write_text(dir / (stem + ".json"), manifest.dump(2) + "\n");
}

std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, sep)) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError(where + ": not a number: '" + s + "'");
  }
}

// Domain selection shared by several subcommands: a preset or a field file.
struct DomainArgs {
  std::string preset;
  std::string field;
  double fwhm = 3.0;
};

void add_domain_options(CLI::App* sub, DomainArgs& a) {
  auto* p = sub->add_option("--preset", a.preset, "domain preset")->check(CLI::IsMember(
      std::vector<std::string>(std::begin(kPresetNames), std::end(kPresetNames))));
  auto* f = sub->add_option("--field", a.field, "field file (.srf1 or .csv)")->check(CLI::ExistingFile);
  p->excludes(f);
}

// -------------------------------------------------------------------------------------------

struct LkcArgs {
  DomainArgs dom;
  std::string source = "white-noise";
  int r = 1;
  bool face_term = false;
  std::size_t n_subjects = 50;
  std::optional<double> truncation;
};

int run_lkc(const Global& g, const LkcArgs& a) {
  if (a.dom.preset.empty() == a.dom.field.empty()) throw InvalidArgument("lkc: give exactly one of --preset, --field");
  if (a.r < 0 || (a.r > 0 && a.r % 2 == 0)) throw InvalidArgument("lkc: --r must be 0 or odd");
  const std::uint64_t seed = g.seed.value_or(1);

  VoxelSetPtr data_domain, manifold_domain;
  std::shared_ptr<const FieldEnsemble> fields;
  if (!a.dom.preset.empty()) {
    const auto p = make_domain_preset(a.dom.preset, a.dom.fwhm);
    data_domain = p.data_domain;
    manifold_domain = p.manifold_domain;
    if (a.source == "ensemble")
      fields = std::make_shared<const FieldEnsemble>(sample_ensemble(data_domain, a.n_subjects, RngSpec{seed, 0}));
  } else {
    fields = std::make_shared<const FieldEnsemble>(load_fields(a.dom.field));
    data_domain = fields->domain_ptr();
    manifold_domain = data_domain;
  }
  const VoxelManifold manifold(manifold_domain);
  const int D = manifold.dim();

  LkcVector lkc;
  if (a.source == "closed-form") {
    const auto& lat = manifold.lattice();
    if (lat.box_size() != manifold_domain->size())
      throw InvalidArgument("lkc: closed form needs a full rectangular voxel set");
    std::vector<double> sides;
    for (int d = 0; d < D; ++d) sides.push_back(static_cast<double>(lat.extent[d]) * manifold.spacing()[d]);
    lkc = lkc_stationary_closed_form(sides, a.dom.fwhm);
  } else {
    const auto kernel = GaussianKernel::isotropic(D, a.dom.fwhm, a.truncation);
    const auto src = a.source == "ensemble" ? GeometrySource::ensemble(fields) : GeometrySource::white_noise(data_domain);
    lkc = lkc_compute(src, kernel, manifold, a.r, LkcOptions{a.face_term}, Parallelism{g.threads});
  }

  std::ostringstream csv;
  csv << "source,D,f,r,L0,L1,L2,L3\n";
  csv << to_string(lkc.source) << ',' << D << ',' << num(a.dom.fwhm) << ',' << lkc.r;
  for (int d = 0; d < 4; ++d) csv << ',' << num(lkc.L[d]);
  csv << '\n';

  ojson m = manifest_head("lkc");
  m["csv_schema"] = kLkcSchema;
  ojson cfg;
  if (!a.dom.preset.empty())
    cfg["preset"] = a.dom.preset;
  else
    cfg["field"] = a.dom.field;
  cfg["fwhm"] = a.dom.fwhm;
  cfg["source"] = a.source;
  cfg["r"] = a.r;
  cfg["face_term"] = a.face_term;
  cfg["truncation"] = a.truncation ? ojson(*a.truncation) : ojson(nullptr);
  if (a.source == "ensemble" && !a.dom.preset.empty()) cfg["n_subjects"] = a.n_subjects;
  cfg["seed"] = seed;
  m["config"] = cfg;
  m["tolerances"] = {{"psd_clip_eigenvalue", 1e-12}};
  m["lkc"] = to_json(lkc);
  emit(g, "lkc", csv.str(), m);
  return 0;
}

// -------------------------------------------------------------------------------------------

struct ThresholdArgs {
  std::string lkc_file;
  std::vector<double> L;
  double alpha = 0.05;
  std::optional<double> df;
};

int run_threshold(const Global& g, const ThresholdArgs& a) {
  if (!(a.alpha > 0.0 && a.alpha < 1.0)) throw InvalidArgument("threshold: alpha must lie in (0, 1)");
  const FieldType type = a.df ? FieldType::student_t(*a.df) : FieldType::gaussian();

  struct Row {
    std::string source = "given";
    std::string f;
    std::string r;
    LkcVector lkc;
  };
  std::vector<Row> rows;
  if (!a.L.empty()) {
    if (a.L.size() < 2 || a.L.size() > 4) throw InvalidArgument("threshold: --L takes L0..LD with 1 <= D <= 3");
    Row row;
    row.lkc.dim = static_cast<int>(a.L.size()) - 1;
    for (std::size_t d = 0; d < a.L.size(); ++d) row.lkc.L[d] = a.L[d];
    rows.push_back(row);
  } else {
    std::ifstream f(a.lkc_file);
    if (!f) throw Error("cannot open '" + a.lkc_file + "'");
    std::string line;
    if (!std::getline(f, line)) throw FormatError(a.lkc_file + ":1: empty file");
    const auto header = split(line);
    auto col = [&](const std::string& name) -> std::optional<std::size_t> {
      for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
      return std::nullopt;
    };
    const auto cD = col("D");
    if (!cD || !col("L0")) throw FormatError(a.lkc_file + ":1: header needs columns D and L0..LD");
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
      ++lineno;
      if (line.empty() || line == "\r") continue;
      const auto cells = split(line);
      const std::string where = a.lkc_file + ":" + std::to_string(lineno);
      if (cells.size() != header.size()) throw FormatError(where + ": expected " + std::to_string(header.size()) + " columns");
      Row row;
      row.lkc.dim = static_cast<int>(parse_double(cells[*cD], where));
      if (row.lkc.dim < 1 || row.lkc.dim > 3) throw FormatError(where + ": D must be 1, 2 or 3");
      for (int d = 0; d <= row.lkc.dim; ++d) {
        const auto c = col("L" + std::to_string(d));
        if (!c) throw FormatError(a.lkc_file + ":1: missing column L" + std::to_string(d));
        row.lkc.L[d] = parse_double(cells[*c], where);
      }
      if (auto c = col("source")) row.source = cells[*c];
      if (auto c = col("f")) row.f = cells[*c];
      if (auto c = col("r")) row.r = cells[*c];
      rows.push_back(row);
    }
    if (rows.empty()) throw FormatError(a.lkc_file + ": no data rows");
  }

  std::ostringstream csv;
  csv << "source,D,f,r,alpha,field,df,u\n";
  ojson m = manifest_head("threshold");
  m["csv_schema"] = kThresholdSchema;
  m["config"] = {{"lkc", a.L.empty() ? ojson(a.lkc_file) : ojson(a.L)},
                 {"alpha", a.alpha},
                 {"field", type.name()},
                 {"df", a.df ? ojson(*a.df) : ojson(nullptr)}};
  auto results = ojson::array();
  for (const auto& row : rows) {
    const double u = threshold(row.lkc, type, a.alpha);
    csv << row.source << ',' << row.lkc.dim << ',' << row.f << ',' << row.r << ',' << num(a.alpha) << ','
        << (a.df ? "t" : "gaussian") << ',' << (a.df ? num(*a.df) : std::string()) << ',' << num(u) << '\n';
    results.push_back({{"D", row.lkc.dim},
                       {"L", std::vector<double>(row.lkc.L.begin(), row.lkc.L.begin() + row.lkc.dim + 1)},
                       {"u", u}});
  }
  m["thresholds"] = results;
  emit(g, "threshold", csv.str(), m);
  return 0;
}

// -------------------------------------------------------------------------------------------

struct FwerArgs {
  std::string config;
  bool dry_run = false;
  bool replications = false;
};

int run_fwer(const Global& g, const FwerArgs& a, bool threads_given) {
  RunConfig cfg = load_run_config(a.config);
  if (g.seed) cfg.seed = *g.seed;
  if (threads_given) cfg.threads = g.threads;
  const auto plan = cfg.experiments();

  ojson m = manifest_head("fwer-sim");
  m["csv_schema"] = kFwerSchema;
  m["config"] = to_json(cfg);

  if (a.dry_run) {
    auto exps = ojson::array();
    for (const auto& e : plan) exps.push_back(to_json(e));
    m["plan"] = exps;
    std::cout << m.dump(2) << '\n';
    return 0;
  }

  std::ostringstream csv;
  csv << "preset,f,N,n_reps,alpha,r_scan,r_lkc,mode,completed,failures,exceedances,fwer,se,eec\n";
  auto reports = ojson::array();
  std::size_t failures = 0;
  for (const auto& e : plan) {
    std::cerr << "fwer-sim: " << e.preset << " f=" << num(e.fwhm) << " N=" << e.n_subjects << " B=" << e.n_reps
              << '\n';
    const auto rep = fwer_experiment(e, Parallelism{cfg.threads});
    failures += rep.failures;
    for (const auto& mode : rep.modes) {
      csv << e.preset << ',' << num(e.fwhm) << ',' << e.n_subjects << ',' << e.n_reps << ',' << num(e.alpha) << ','
          << e.r_scan << ',' << e.r_lkc << ',' << mode.mode << ',' << rep.completed << ',' << rep.failures << ','
          << mode.exceedances << ',' << num(mode.fwer) << ',' << num(mode.se) << ',' << num(mode.eec) << '\n';
    }
    reports.push_back(to_json(rep, a.replications));
  }
  m["experiments"] = reports;
  m["failures"] = failures;
  emit(g, "fwer", csv.str(), m);
  if (failures > 0) {
    std::cerr << "fwer-sim: " << failures << " replication(s) failed\n";
    return 1;
  }
  return 0;
}

// -------------------------------------------------------------------------------------------

VoxelSetPtr manifold_domain_of(const DomainArgs& a, const std::string& cmd) {
  if (a.preset.empty() == a.field.empty()) throw InvalidArgument(cmd + ": give exactly one of --preset, --field");
  if (!a.preset.empty()) return make_domain_preset(a.preset, a.fwhm).manifold_domain;
  return load_fields(a.field).domain_ptr();
}

int run_census(const Global& g, const DomainArgs& a) {
  const VoxelManifold manifold(manifold_domain_of(a, "census"));
  const auto census = classify_boundary(manifold);
  const auto chi = euler_characteristic(manifold);

  ojson m = manifest_head("census");
  m["config"] = a.preset.empty() ? ojson{{"field", a.field}} : ojson{{"preset", a.preset}};
  m["D"] = census.dim;
  m["voxels"] = manifold.domain().size();
  m["euler_characteristic"] = chi;
  m["faces"] = std::vector<std::size_t>(census.faces.begin(), census.faces.begin() + census.dim);
  auto edges = ojson::array();
  for (const auto& e : census.edges)
    edges.push_back({{"axis", e.axis + 1}, {"type", to_string(e.type)}, {"count", e.count}});
  m["edges"] = edges;
  m["vertices"] = census.vertices;

  std::ostringstream csv;
  csv << "stratum,axis,type,count\n";
  for (int d = 0; d < census.dim; ++d) csv << "face," << d + 1 << ",," << census.faces[d] << '\n';
  for (const auto& e : census.edges) csv << "edge," << e.axis + 1 << ',' << to_string(e.type) << ',' << e.count << '\n';
  csv << "vertex,,," << census.vertices << '\n';
  csv << "euler,,," << chi << '\n';

  // JSON unless csv was asked for explicitly.
  Global gj = g;
  if (!g.format_given) gj.format = "json";
  emit(gj, "census", csv.str(), m);
  return 0;
}

// -------------------------------------------------------------------------------------------

struct NondegArgs {
  DomainArgs dom;
  std::optional<double> truncation;
  std::vector<double> point;
  int r = 1;
};

int run_nondegeneracy(const Global& g, const NondegArgs& a) {
  if (a.dom.preset.empty() == a.dom.field.empty())
    throw InvalidArgument("check-nondegeneracy: give exactly one of --preset, --field");
  VoxelSetPtr data_domain, manifold_domain;
  if (!a.dom.preset.empty()) {
    const auto p = make_domain_preset(a.dom.preset, a.dom.fwhm);
    data_domain = p.data_domain;
    manifold_domain = p.manifold_domain;
  } else {
    data_domain = load_fields(a.dom.field).domain_ptr();
    manifold_domain = data_domain;
  }
  const int D = data_domain->dim();
  const auto kernel = GaussianKernel::isotropic(D, a.dom.fwhm, a.truncation);

  std::vector<Vec> points;
  if (!a.point.empty()) {
    if (static_cast<int>(a.point.size()) != D) throw InvalidArgument("check-nondegeneracy: --point needs D coordinates");
    Vec x(D);
    for (int d = 0; d < D; ++d) x[d] = a.point[d];
    points.push_back(x);
  } else {
    const VoxelManifold manifold(manifold_domain);
    points = refined_grid(manifold, a.r).points();
  }

  std::size_t failed = 0, min_rank = 0, min_support = 0;
  bool first = true;
  std::ostringstream csv;
  csv << "point,rank,required,support,pass\n";
  auto failures = ojson::array();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto rep = nondegeneracy_check(kernel, *data_domain, points[i]);
    if (first || rep.rank < min_rank) min_rank = rep.rank;
    if (first || rep.support_size < min_support) min_support = rep.support_size;
    first = false;
    if (!rep.pass) {
      ++failed;
      std::vector<double> x(points[i].data(), points[i].data() + D);
      if (failures.size() < 100) failures.push_back({{"point", x}, {"rank", rep.rank}, {"support", rep.support_size}});
    }
    if (!rep.pass || points.size() == 1) {
      for (int d = 0; d < D; ++d) csv << (d ? " " : "") << num(points[i][d]);
      csv << ',' << rep.rank << ',' << rep.required << ',' << rep.support_size << ',' << (rep.pass ? 1 : 0) << '\n';
    }
  }
  ojson m = manifest_head("check-nondegeneracy");
  ojson cfg;
  if (!a.dom.preset.empty())
    cfg["preset"] = a.dom.preset;
  else
    cfg["field"] = a.dom.field;
  cfg["fwhm"] = a.dom.fwhm;
  cfg["truncation"] = a.truncation ? ojson(*a.truncation) : ojson(nullptr);
  if (a.point.empty()) cfg["r"] = a.r;
  m["config"] = cfg;
  m["points_checked"] = points.size();
  m["required_rank"] = 1 + D + D * (D + 1) / 2;
  m["min_rank"] = min_rank;
  m["min_support"] = min_support;
  m["failed"] = failed;
  m["failures"] = failures;
  m["pass"] = failed == 0;
  emit(g, "nondegeneracy", csv.str(), m);
  return failed == 0 ? 0 : 1;
}

// -------------------------------------------------------------------------------------------

struct SurfArgs {
  std::string field;
  std::string points;
  double fwhm = 3.0;
  std::optional<double> truncation;
  std::string order = "value";
  std::size_t index = 0;
  bool normalize = false;
  bool t_stat = false;
};

std::vector<Vec> read_points(const std::string& path, int D) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open '" + path + "'");
  std::vector<Vec> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    const std::string where = path + ":" + std::to_string(lineno);
    if (lineno == 1 && !cells.empty() && !cells[0].empty() && std::isalpha(static_cast<unsigned char>(cells[0][0])))
      continue;  // header
    if (static_cast<int>(cells.size()) != D)
      throw FormatError(where + ": expected " + std::to_string(D) + " coordinates");
    Vec x(D);
    for (int d = 0; d < D; ++d) x[d] = parse_double(cells[d], where + ": column " + std::to_string(d + 1));
    out.push_back(x);
  }
  return out;
}

int run_surf_eval(const Global& g, const SurfArgs& a) {
  auto fields = std::make_shared<const FieldEnsemble>(load_fields(a.field));
  const int D = fields->domain().dim();
  const auto pts = read_points(a.points, D);
  const Order order = a.order == "hessian" ? Order::hessian : a.order == "gradient" ? Order::gradient : Order::value;
  if (a.t_stat && order == Order::hessian) throw InvalidArgument("surf eval: the t statistic supports value and gradient");
  if (!a.t_stat && a.index >= fields->n_fields()) throw InvalidArgument("surf eval: --index out of range");

  const SurfSpec spec(fields, GaussianKernel::isotropic(D, a.fwhm, a.truncation), a.normalize);
  const auto vals = a.t_stat ? t_field(spec, pts, order, Parallelism{g.threads})
                             : surf_eval(spec, pts, order, a.index, Parallelism{g.threads});

  std::ostringstream csv;
  for (int d = 0; d < D; ++d) csv << 'x' << d + 1 << ',';
  csv << "value";
  if (order != Order::value)
    for (int d = 0; d < D; ++d) csv << ",d" << d + 1;
  if (order == Order::hessian)
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) csv << ",h" << i + 1 << j + 1;
  csv << '\n';
  for (std::size_t p = 0; p < vals.size(); ++p) {
    for (int d = 0; d < D; ++d) csv << num(pts[p][d]) << ',';
    csv << num(vals.values[p]);
    if (order != Order::value)
      for (int d = 0; d < D; ++d) csv << ',' << num(vals.gradients[p * D + d]);
    if (order == Order::hessian)
      for (int k = 0; k < D * D; ++k) csv << ',' << num(vals.hessians[p * D * D + k]);
    csv << '\n';
  }
  ojson m = manifest_head("surf eval");
  m["csv_schema"] = kSurfSchema;
  m["config"] = {{"field", a.field},
                 {"points", a.points},
                 {"fwhm", a.fwhm},
                 {"truncation", a.truncation ? ojson(*a.truncation) : ojson(nullptr)},
                 {"order", a.order},
                 {"statistic", a.t_stat ? "t" : "surf"},
                 {"index", a.index},
                 {"normalize", a.normalize}};
  auto rows = ojson::array();
  for (std::size_t p = 0; p < vals.size(); ++p) {
    ojson r;
    r["x"] = std::vector<double>(pts[p].data(), pts[p].data() + D);
    r["value"] = vals.values[p];
    if (order != Order::value)
      r["gradient"] = std::vector<double>(vals.gradients.begin() + p * D, vals.gradients.begin() + (p + 1) * D);
    if (order == Order::hessian)
      r["hessian"] =
          std::vector<double>(vals.hessians.begin() + p * D * D, vals.hessians.begin() + (p + 1) * D * D);
    rows.push_back(r);
  }
  m["values"] = rows;
  emit(g, "surf", csv.str(), m);
  return 0;
}

// -------------------------------------------------------------------------------------------

struct SampleArgs {
  std::string preset = "stat2d";
  double fwhm = 3.0;
  std::size_t n = 50;
  std::string file = "fields.srf1";
};

int run_sample(const Global& g, const SampleArgs& a) {
  const std::uint64_t seed = g.seed.value_or(1);
  const auto p = make_domain_preset(a.preset, a.fwhm);
  const auto e = sample_ensemble(p.data_domain, a.n, RngSpec{seed, 0});
  const fs::path path = g.out.empty() ? fs::path(a.file) : fs::path(g.out) / a.file;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  if (ends_with(a.file, ".csv"))
    write_csv(path.string(), e);
  else
    write_srf1(path.string(), e);
  ojson m = manifest_head("sample");
  m["config"] = {{"preset", a.preset}, {"fwhm", a.fwhm}, {"n_subjects", a.n}, {"seed", seed}};
  m["file"] = path.string();
  m["voxels"] = e.n_voxels();
  std::cout << m.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"surfield: super-resolution fields, LKC estimation and EEC thresholds"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_version_flag("--version", version_string());

  Global g;
  std::uint64_t seed = 1;
  auto* format_opt = app.add_option("--format", g.format, "stdout format when --out is not given")
      ->check(CLI::IsMember({"csv", "json"}));
  auto* seed_opt = app.add_option("--seed", seed, "master RNG seed");
  auto* threads_opt = app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "output directory for CSV/JSON artifacts");

  LkcArgs lkc;
  auto* lkc_cmd = app.add_subcommand("lkc", "estimate Lipschitz-Killing curvatures of a voxel manifold");
  add_domain_options(lkc_cmd, lkc.dom);
  lkc_cmd->add_option("--fwhm", lkc.dom.fwhm, "kernel FWHM")->required()->check(CLI::PositiveNumber);
  lkc_cmd->add_option("--source", lkc.source, "white-noise, ensemble or closed-form")
      ->check(CLI::IsMember({"white-noise", "ensemble", "closed-form"}));
  lkc_cmd->add_option("--r", lkc.r, "added resolution (0 or odd)");
  lkc_cmd->add_flag("--face-term", lkc.face_term, "include the Christoffel face term in L1 (D = 3)");
  lkc_cmd->add_option("--n", lkc.n_subjects, "fields sampled for --source ensemble with --preset");
  lkc_cmd->add_option("--truncation", lkc.truncation, "kernel truncation radius");

  ThresholdArgs thr;
  auto* thr_cmd = app.add_subcommand("threshold", "EEC threshold from LKCs");
  auto* thr_file = thr_cmd->add_option("--lkc", thr.lkc_file, "LKC CSV (as written by lkc)")->check(CLI::ExistingFile);
  auto* thr_L = thr_cmd->add_option("--L", thr.L, "LKCs L0 .. LD")->delimiter(',');
  thr_file->excludes(thr_L);
  thr_cmd->add_option("--alpha", thr.alpha, "target expected EC")->required();
  thr_cmd->add_option("--df", thr.df, "Student t degrees of freedom (Gaussian when absent)")
      ->check(CLI::PositiveNumber);

  FwerArgs fw;
  auto* fw_cmd = app.add_subcommand("fwer-sim", "null-data FWER simulation");
  fw_cmd->add_option("--config", fw.config, "JSON run config")->required()->check(CLI::ExistingFile);
  fw_cmd->add_flag("--dry-run", fw.dry_run, "print the resolved plan and exit");
  fw_cmd->add_flag("--replications", fw.replications, "include per-replication records in the JSON report");

  DomainArgs census;
  auto* census_cmd = app.add_subcommand("census", "boundary stratum census (JSON)");
  add_domain_options(census_cmd, census);
  auto* manifold_cmd = app.add_subcommand("manifold", "voxel manifold tools");
  manifold_cmd->require_subcommand(1);
  DomainArgs census2;
  auto* mcensus_cmd = manifold_cmd->add_subcommand("census", "boundary stratum census (JSON)");
  add_domain_options(mcensus_cmd, census2);

  NondegArgs nd;
  auto* nd_cmd = app.add_subcommand("check-nondegeneracy", "rank of the kernel jet over its support");
  add_domain_options(nd_cmd, nd.dom);
  nd_cmd->add_option("--fwhm", nd.dom.fwhm, "kernel FWHM")->check(CLI::PositiveNumber);
  nd_cmd->add_option("--truncation", nd.truncation, "kernel truncation radius");
  nd_cmd->add_option("--point", nd.point, "single point to check (default: all points of M^(r))")->delimiter(',');
  nd_cmd->add_option("--r", nd.r, "grid resolution when no point is given");

  SurfArgs sf;
  auto* surf_cmd = app.add_subcommand("surf", "SuRF evaluation");
  surf_cmd->require_subcommand(1);
  auto* eval_cmd = surf_cmd->add_subcommand("eval", "evaluate a SuRF at points read from CSV");
  eval_cmd->add_option("--field", sf.field, "field file (.srf1 or .csv)")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--points", sf.points, "CSV of points, one per row")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--fwhm", sf.fwhm, "kernel FWHM")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--truncation", sf.truncation, "kernel truncation radius");
  eval_cmd->add_option("--order", sf.order, "value, gradient or hessian")
      ->check(CLI::IsMember({"value", "gradient", "hessian"}));
  eval_cmd->add_option("--index", sf.index, "field index within the ensemble");
  eval_cmd->add_flag("--normalize", sf.normalize, "unit-variance SuRF");
  eval_cmd->add_flag("--t", sf.t_stat, "evaluate the one-sample t statistic instead");

  SampleArgs sa;
  auto* sample_cmd = app.add_subcommand("sample", "draw white-noise fields on a preset domain");
  sample_cmd->add_option("--preset", sa.preset, "domain preset")
      ->check(CLI::IsMember(std::vector<std::string>(std::begin(kPresetNames), std::end(kPresetNames))));
  sample_cmd->add_option("--fwhm", sa.fwhm, "FWHM used to size stationary presets")->check(CLI::PositiveNumber);
  sample_cmd->add_option("--n", sa.n, "number of fields")->check(CLI::PositiveNumber);
  sample_cmd->add_option("--file", sa.file, "output file name (.srf1 or .csv)");

  CLI11_PARSE(app, argc, argv);
  if (seed_opt->count()) g.seed = seed;
  g.format_given = format_opt->count() > 0;

  try {
    if (lkc_cmd->parsed()) return run_lkc(g, lkc);
    if (thr_cmd->parsed()) {
      if (thr.lkc_file.empty() && thr.L.empty()) throw InvalidArgument("threshold: give --lkc or --L");
      return run_threshold(g, thr);
    }
    if (fw_cmd->parsed()) return run_fwer(g, fw, threads_opt->count() > 0);
    if (census_cmd->parsed()) return run_census(g, census);
    if (mcensus_cmd->parsed()) return run_census(g, census2);
    if (nd_cmd->parsed()) return run_nondegeneracy(g, nd);
    if (eval_cmd->parsed()) return run_surf_eval(g, sf);
    if (sample_cmd->parsed()) return run_sample(g, sa);
  } catch (const std::exception& e) {
    std::cerr << "surfield: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
