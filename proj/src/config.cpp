#include "surfield/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "surfield/error.hpp"

#ifndef SURFIELD_VERSION
#define SURFIELD_VERSION "0.0.0"
#endif
#ifndef SURFIELD_GIT_DESCRIBE
#define SURFIELD_GIT_DESCRIBE "unknown"
#endif

namespace surfield {

using json = nlohmann::json;

namespace {

std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

std::size_t line_of_key(const std::string& text, const std::string& key) {
  const auto pos = text.find('"' + key + '"');
  return pos == std::string::npos ? 0 : line_of_offset(text, pos);
}

class FieldReader {
 public:
  FieldReader(const std::string& text, const std::string& source, const json& doc)
      : text_(text), source_(source), doc_(doc) {}

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    const std::size_t line = line_of_key(text_, key);
    std::ostringstream os;
    os << source_;
    if (line) os << ':' << line;
    os << ": field '" << key << "': " << what;
    throw FormatError(os.str());
  }

  bool has(const std::string& key) const { return doc_.contains(key); }

  double number(const std::string& key, const json& v) const {
    if (!v.is_number()) fail(key, "expected a number");
    return v.get<double>();
  }

  std::int64_t integer(const std::string& key, const json& v) const {
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<std::int64_t>();
  }

  const json& at(const std::string& key) const { return doc_.at(key); }

 private:
  const std::string& text_;
  const std::string& source_;
  const json& doc_;
};

}  // namespace

std::vector<FwerConfig> RunConfig::experiments() const {
  std::vector<FwerConfig> out;
  for (double f : fwhm)
    for (std::size_t n : n_subjects) {
      FwerConfig c;
      c.preset = preset;
      c.fwhm = f;
      c.n_subjects = n;
      c.n_reps = n_reps;
      c.alpha = alpha;
      c.r_scan = r_scan;
      c.r_lkc = r_lkc;
      c.seed = seed;
      c.starts = starts;
      out.push_back(c);
    }
  return out;
}

RunConfig parse_run_config(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(source + ":" + std::to_string(line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1)) +
                      ": malformed JSON: " + e.what());
  }
  if (!doc.is_object()) throw FormatError(source + ":1: top level must be a JSON object");
  FieldReader rd(text, source, doc);

  static const std::vector<std::string> known = {"preset", "fwhm",   "n_subjects", "n_reps", "alpha",
                                                 "r_scan", "r_lkc", "seed",       "threads", "starts"};
  for (const auto& [key, value] : doc.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) rd.fail(key, "unknown field");
  }
  for (const char* key : {"preset", "fwhm", "n_subjects", "n_reps", "alpha"}) {
    if (!rd.has(key)) throw FormatError(source + ": missing required field '" + key + "'");
  }

  RunConfig cfg;
  const json& preset = rd.at("preset");
  if (!preset.is_string()) rd.fail("preset", "expected a string");
  cfg.preset = preset.get<std::string>();
  if (std::find(std::begin(kPresetNames), std::end(kPresetNames), cfg.preset) == std::end(kPresetNames)) {
    rd.fail("preset", "unknown preset '" + cfg.preset + "'");
  }

  auto list = [&](const std::string& key) {
    const json& v = rd.at(key);
    std::vector<json> items;
    if (v.is_array()) {
      if (v.empty()) rd.fail(key, "list must not be empty");
      for (const auto& x : v) items.push_back(x);
    } else {
      items.push_back(v);
    }
    return items;
  };
  cfg.fwhm.clear();
  for (const auto& x : list("fwhm")) {
    const double f = rd.number("fwhm", x);
    if (!(f > 0.0)) rd.fail("fwhm", "must be positive");
    cfg.fwhm.push_back(f);
  }
  cfg.n_subjects.clear();
  for (const auto& x : list("n_subjects")) {
    const auto n = rd.integer("n_subjects", x);
    if (n < 2) rd.fail("n_subjects", "must be at least 2");
    cfg.n_subjects.push_back(static_cast<std::size_t>(n));
  }
  const auto reps = rd.integer("n_reps", rd.at("n_reps"));
  if (reps < 1) rd.fail("n_reps", "must be at least 1");
  cfg.n_reps = static_cast<std::size_t>(reps);
  cfg.alpha = rd.number("alpha", rd.at("alpha"));
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) rd.fail("alpha", "must lie in (0, 1)");
  for (const char* key : {"r_scan", "r_lkc"}) {
    if (!rd.has(key)) continue;
    const auto r = rd.integer(key, rd.at(key));
    if (r < 1 || r % 2 == 0) rd.fail(key, "must be an odd positive integer");
    (std::string(key) == "r_scan" ? cfg.r_scan : cfg.r_lkc) = static_cast<int>(r);
  }
  if (rd.has("seed")) {
    const json& s = rd.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0)) {
      rd.fail("seed", "expected a non-negative integer");
    }
    cfg.seed = s.get<std::uint64_t>();
  }
  if (rd.has("threads")) {
    const auto t = rd.integer("threads", rd.at("threads"));
    if (t < 1) rd.fail("threads", "must be at least 1");
    cfg.threads = static_cast<unsigned>(t);
  }
  if (rd.has("starts")) {
    const auto k = rd.integer("starts", rd.at("starts"));
    if (k < 1) rd.fail("starts", "must be at least 1");
    cfg.starts = static_cast<std::size_t>(k);
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_run_config(ss.str(), path);
}

nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["preset"] = c.preset;
  j["fwhm"] = c.fwhm;
  j["n_subjects"] = c.n_subjects;
  j["n_reps"] = c.n_reps;
  j["alpha"] = c.alpha;
  j["r_scan"] = c.r_scan;
  j["r_lkc"] = c.r_lkc;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["starts"] = c.starts;
  return j;
}

nlohmann::ordered_json to_json(const FwerConfig& c) {
  nlohmann::ordered_json j;
  j["preset"] = c.preset;
  j["fwhm"] = c.fwhm;
  j["n_subjects"] = c.n_subjects;
  j["n_reps"] = c.n_reps;
  j["alpha"] = c.alpha;
  j["r_scan"] = c.r_scan;
  j["r_lkc"] = c.r_lkc;
  j["seed"] = c.seed;
  j["starts"] = c.starts;
  return j;
}

nlohmann::ordered_json to_json(const LkcVector& lkc) {
  nlohmann::ordered_json j;
  j["source"] = to_string(lkc.source);
  j["D"] = lkc.dim;
  j["r"] = lkc.r;
  std::vector<double> L(lkc.L.begin(), lkc.L.begin() + lkc.dim + 1);
  j["L"] = L;
  if (lkc.dim == 3 && lkc.source != LkcSource::stationary_closed_form) {
    j["l1_locally_stationary"] = lkc.l1_locally_stationary;
    j["l1_face_term"] = lkc.l1_face_term;
  }
  j["clipped_points"] = lkc.clipped_points;
  return j;
}

nlohmann::ordered_json to_json(const FwerReport& r, bool with_replications) {
  nlohmann::ordered_json j;
  j["config"] = to_json(r.config);
  j["completed"] = r.completed;
  j["failures"] = r.failures;
  auto modes = nlohmann::ordered_json::array();
  for (const auto& m : r.modes) {
    nlohmann::ordered_json mj;
    mj["r"] = m.mode;
    mj["exceedances"] = m.exceedances;
    mj["fwer"] = m.fwer;
    mj["se"] = m.se;
    mj["eec"] = m.eec;
    modes.push_back(mj);
  }
  j["modes"] = modes;
  auto errors = nlohmann::ordered_json::array();
  for (const auto& rep : r.replications) {
    if (!rep.ok) errors.push_back({{"replication", rep.index}, {"error", rep.error}});
  }
  j["errors"] = errors;
  if (with_replications) {
    auto reps = nlohmann::ordered_json::array();
    for (const auto& rep : r.replications) {
      if (!rep.ok) continue;
      nlohmann::ordered_json rj;
      rj["replication"] = rep.index;
      rj["threshold"] = rep.threshold;
      rj["lkc"] = std::vector<double>(rep.lkc.L.begin(), rep.lkc.L.begin() + rep.lkc.dim + 1);
      rj["max"] = rep.max;
      rj["maxima_above"] = rep.maxima_above;
      reps.push_back(rj);
    }
    j["replications"] = reps;
  }
  return j;
}

std::string version_string() { return std::string(SURFIELD_VERSION) + " (" + SURFIELD_GIT_DESCRIBE + ")"; }

}  // namespace surfield
