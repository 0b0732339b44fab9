#include "bbsense/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

namespace bbsense {

using nlohmann::json;

namespace {

std::string join(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

// Reads fields of one JSON object and remembers which keys were consumed.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw SchemaError(path_, "expected an object");
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return obj_.at(key);
  }

  std::string path(const std::string& key) const { return join(path_, key); }

  void real(const std::string& key, Real& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_number()) throw SchemaError(path(key), "expected a number");
    out = v.get<Real>();
  }

  void integer(const std::string& key, int& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_number_integer()) throw SchemaError(path(key), "expected an integer");
    out = v.get<int>();
  }

  void boolean(const std::string& key, bool& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_boolean()) throw SchemaError(path(key), "expected true or false");
    out = v.get<bool>();
  }

  void seed(const std::string& key, Seed& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_number_unsigned()) throw SchemaError(path(key), "expected a non-negative integer");
    out = v.get<Seed>();
  }

  void reals(const std::string& key, std::vector<Real>& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_array() || v.empty()) throw SchemaError(path(key), "expected a non-empty array of numbers");
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw SchemaError(path(key) + "[" + std::to_string(i) + "]", "expected a number");
      out.push_back(v[i].get<Real>());
    }
  }

  void integers(const std::string& key, std::vector<int>& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_array() || v.empty()) throw SchemaError(path(key), "expected a non-empty array of integers");
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_integer())
        throw SchemaError(path(key) + "[" + std::to_string(i) + "]", "expected an integer");
      out.push_back(v[i].get<int>());
    }
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_string()) throw SchemaError(path(key), "expected a string");
    return v.get<std::string>();
  }

  void finish() const {
    for (const auto& item : obj_.items())
      if (!seen_.count(item.key())) throw SchemaError(join(path_, item.key()), "unknown key");
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

void check(bool ok, const std::string& path, const std::string& message) {
  if (!ok) throw SchemaError(path, message);
}

std::vector<CellSpec> parse_grid(ObjectReader& root) {
  ObjectReader g(root.raw("grid"), "grid");
  std::vector<int> ms{1, 2};
  std::vector<Real> rs{8, 16, 32, 64};
  std::vector<Real> fractions{1e-3, 3e-3};
  g.integers("m", ms);
  g.reals("r", rs);
  g.reals("b_min_fraction", fractions);
  g.finish();
  std::vector<CellSpec> cells;
  for (int m : ms)
    for (Real f : fractions)
      for (Real r : rs) cells.push_back({m, r, f});
  return cells;
}

std::vector<CellSpec> parse_cells(ObjectReader& root) {
  const json& list = root.raw("cells");
  check(list.is_array() && !list.empty(), "cells", "expected a non-empty array of cell objects");
  std::vector<CellSpec> cells;
  for (std::size_t i = 0; i < list.size(); ++i) {
    ObjectReader c(list[i], "cells[" + std::to_string(i) + "]");
    CellSpec cell;
    c.integer("m", cell.m);
    c.real("r", cell.r);
    c.real("b_min_fraction", cell.b_min_fraction);
    c.finish();
    cells.push_back(cell);
  }
  return cells;
}

}  // namespace

std::vector<CellSpec> default_cells() {
  std::vector<CellSpec> cells;
  for (int m : {1, 2})
    for (Real f : {1e-3, 3e-3})
      for (Real r : {8.0, 16.0, 32.0, 64.0}) cells.push_back({m, r, f});
  return cells;
}

std::string to_string(Units units) { return units == Units::hz ? "hz" : "rad"; }

std::string to_string(StopStatistic statistic) {
  return statistic == StopStatistic::l1_diagonal ? "l1" : "pdet";
}

AppConfig parse_config(const json& doc) {
  AppConfig cfg;
  SweepConfig& s = cfg.sweep;
  ObjectReader root(doc, "");

  const std::string units = root.string("units", "rad");
  check(units == "rad" || units == "hz", "units", "expected \"rad\" or \"hz\"");
  s.units = units == "hz" ? Units::hz : Units::rad;
  s.omega_min_input = s.units == Units::hz ? 1e8 : kTwoPi * 1e8;
  root.real("omega_min", s.omega_min_input);
  check(s.omega_min_input > 0, "omega_min", "must be positive");

  check(!(root.has("grid") && root.has("cells")), "cells", "give either \"grid\" or \"cells\", not both");
  if (root.has("grid"))
    s.cells = parse_grid(root);
  else if (root.has("cells"))
    s.cells = parse_cells(root);
  else
    s.cells = default_cells();
  for (std::size_t i = 0; i < s.cells.size(); ++i) {
    const std::string p = "cells[" + std::to_string(i) + "]";
    check(s.cells[i].m >= 1, p + ".m", "must be >= 1");
    check(s.cells[i].r >= 4, p + ".r", "must be >= 4");
    check(s.cells[i].b_min_fraction > 0 && s.cells[i].b_min_fraction <= 1, p + ".b_min_fraction",
          "must lie in (0, 1]");
  }

  root.integer("n_samples", s.n_samples);
  check(s.n_samples >= 1, "n_samples", "must be >= 1");
  root.real("threshold", s.threshold);
  check(s.threshold >= 0, "threshold", "must be non-negative");
  const std::string statistic = root.string("statistic", "l1");
  check(statistic == "l1" || statistic == "pdet", "statistic", "expected \"l1\" or \"pdet\"");
  s.statistic = statistic == "l1" ? StopStatistic::l1_diagonal : StopStatistic::p_det;

  if (root.has("t_grid")) {
    ObjectReader g(root.raw("t_grid"), "t_grid");
    g.real("t_min_factor", s.grid.t_min_factor);
    g.real("growth", s.grid.growth);
    g.real("t_max_multiplier", s.grid.t_max_multiplier);
    g.finish();
  }
  check(s.grid.t_min_factor > 0, "t_grid.t_min_factor", "must be positive");
  check(s.grid.growth > 1, "t_grid.growth", "must exceed 1");
  check(s.grid.t_max_multiplier >= s.grid.t_min_factor, "t_grid.t_max_multiplier",
        "must be >= t_min_factor");

  root.seed("seed_root", s.seed_root);
  root.real("max_drive_ratio", s.max_drive_ratio);
  check(s.max_drive_ratio > 0, "max_drive_ratio", "must be positive");
  root.real("signal_scale", s.signal_scale);
  check(s.signal_scale >= 0, "signal_scale", "must be non-negative");

  if (root.has("constants")) {
    ObjectReader c(root.raw("constants"), "constants");
    c.real("c1", s.constants.c1);
    c.real("c2", s.constants.c2);
    c.real("c_ceiling", s.constants.c_ceiling);
    c.real("c_test", s.constants.c_test);
    c.finish();
  }
  check(s.constants.c1 > 0 && s.constants.c2 > 0 && s.constants.c_ceiling > 0 && s.constants.c_test > 0,
        "constants", "all constants must be positive");

  if (root.has("flatness")) {
    FlatnessSettings& f = cfg.flatness;
    ObjectReader r(root.raw("flatness"), "flatness");
    r.integer("m", f.m);
    r.real("b_min_fraction", f.b_min_fraction);
    r.reals("ratios", f.ratios);
    r.integer("n_omega", f.n_omega);
    r.real("t_eval_multiplier", f.t_eval_multiplier);
    r.integer("seed_index", f.seed_index);
    r.finish();
    check(f.m >= 1, "flatness.m", "must be >= 1");
    check(f.b_min_fraction > 0 && f.b_min_fraction <= 1, "flatness.b_min_fraction", "must lie in (0, 1]");
    for (Real ratio : f.ratios) check(ratio >= 1, "flatness.ratios", "entries must be >= 1");
    check(f.n_omega >= 8, "flatness.n_omega", "must be >= 8");
    check(f.t_eval_multiplier > 0, "flatness.t_eval_multiplier", "must be positive");
    check(f.seed_index >= 0, "flatness.seed_index", "must be non-negative");
  }

  if (root.has("trotter")) {
    TrotterSettings& t = cfg.trotter;
    ObjectReader r(root.raw("trotter"), "trotter");
    r.integer("m", t.m);
    r.real("r", t.r);
    r.real("b_fraction", t.b_fraction);
    r.real("t_final_periods", t.t_final_periods);
    r.reals("dt_periods", t.dt_periods);
    r.boolean("commuting", t.commuting);
    r.integer("seed_index", t.seed_index);
    r.finish();
    check(t.m >= 1, "trotter.m", "must be >= 1");
    check(t.r >= 1, "trotter.r", "must be >= 1");
    check(t.b_fraction > 0 && t.b_fraction <= 1, "trotter.b_fraction", "must lie in (0, 1]");
    check(t.t_final_periods > 0, "trotter.t_final_periods", "must be positive");
    check(t.dt_periods.size() >= 3, "trotter.dt_periods", "need at least three steps");
    for (std::size_t i = 0; i < t.dt_periods.size(); ++i)
      check(t.dt_periods[i] > 0 && (i == 0 || t.dt_periods[i] > t.dt_periods[i - 1]), "trotter.dt_periods",
            "must be positive and strictly ascending");
    check(t.seed_index >= 0, "trotter.seed_index", "must be non-negative");
  }

  if (root.has("instance")) {
    InstanceSettings& in = cfg.instance;
    ObjectReader r(root.raw("instance"), "instance");
    r.integer("m", in.m);
    r.real("r", in.r);
    r.real("b_min_fraction", in.b_min_fraction);
    r.integer("sample_index", in.sample_index);
    r.finish();
    check(in.m >= 1, "instance.m", "must be >= 1");
    check(in.r >= 4, "instance.r", "must be >= 4");
    check(in.b_min_fraction > 0 && in.b_min_fraction <= 1, "instance.b_min_fraction", "must lie in (0, 1]");
    check(in.sample_index >= 0, "instance.sample_index", "must be non-negative");
  }

  root.finish();
  return cfg;
}

json config_to_json(const AppConfig& config) {
  const SweepConfig& s = config.sweep;
  json cells = json::array();
  for (const CellSpec& c : s.cells) cells.push_back({{"m", c.m}, {"r", c.r}, {"b_min_fraction", c.b_min_fraction}});
  const FlatnessSettings& f = config.flatness;
  const TrotterSettings& t = config.trotter;
  const InstanceSettings& in = config.instance;
  return {
      {"units", to_string(s.units)},
      {"omega_min", s.omega_min_input},
      {"cells", cells},
      {"n_samples", s.n_samples},
      {"threshold", s.threshold},
      {"statistic", to_string(s.statistic)},
      {"t_grid",
       {{"t_min_factor", s.grid.t_min_factor},
        {"growth", s.grid.growth},
        {"t_max_multiplier", s.grid.t_max_multiplier}}},
      {"seed_root", s.seed_root},
      {"max_drive_ratio", s.max_drive_ratio},
      {"signal_scale", s.signal_scale},
      {"constants",
       {{"c1", s.constants.c1},
        {"c2", s.constants.c2},
        {"c_ceiling", s.constants.c_ceiling},
        {"c_test", s.constants.c_test}}},
      {"flatness",
       {{"m", f.m},
        {"b_min_fraction", f.b_min_fraction},
        {"ratios", f.ratios},
        {"n_omega", f.n_omega},
        {"t_eval_multiplier", f.t_eval_multiplier},
        {"seed_index", f.seed_index}}},
      {"trotter",
       {{"m", t.m},
        {"r", t.r},
        {"b_fraction", t.b_fraction},
        {"t_final_periods", t.t_final_periods},
        {"dt_periods", t.dt_periods},
        {"commuting", t.commuting},
        {"seed_index", t.seed_index}}},
      {"instance",
       {{"m", in.m}, {"r", in.r}, {"b_min_fraction", in.b_min_fraction}, {"sample_index", in.sample_index}}},
  };
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("", "'" + path + "' is not valid JSON: " + e.what());
  }
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw SchemaError("", "override '" + assignment + "' is not of the form key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw SchemaError(key, "empty path component in override");
    if (!node->is_object()) throw SchemaError(key, "override path runs through a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    if (!node->contains(part)) (*node)[part] = json::object();
    node = &(*node)[part];
    start = dot + 1;
  }
}

void apply_seed_environment(json& doc) {
  const char* env = std::getenv("BBSENSE_SEED");
  if (!env) return;
  const std::string text(env);
  std::size_t used = 0;
  Seed value = 0;
  try {
    if (text.empty() || text[0] == '-') throw std::invalid_argument("negative");
    value = std::stoull(text, &used, 0);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size())
    throw SchemaError("seed_root", "BBSENSE_SEED='" + text + "' is not a non-negative integer");
  doc["seed_root"] = value;
}

}  // namespace bbsense
