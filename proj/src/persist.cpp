#include "bbsense/persist.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace bbsense {

using nlohmann::json;

namespace {

json optional_real(const std::optional<Real>& v) { return v ? json(*v) : json(nullptr); }

std::optional<Real> read_optional(const json& v) {
  if (v.is_null()) return std::nullopt;
  return v.get<Real>();
}

}  // namespace

json run_metadata(const AppConfig& config) {
  const SweepConfig& s = config.sweep;
  return {
      {"version", kVersion},
      {"units", to_string(s.units)},
      {"omega_min_rad_per_s", s.omega_min()},
      {"seed_root", s.seed_root},
      {"threshold", s.threshold},
      {"statistic", to_string(s.statistic)},
      {"b_eff", "B per register"},
      {"signal_scale", s.signal_scale},
      {"max_drive_ratio", s.max_drive_ratio},
      {"t_grid",
       {{"t_min_factor", s.grid.t_min_factor},
        {"growth", s.grid.growth},
        {"t_max_multiplier", s.grid.t_max_multiplier}}},
      {"constants",
       {{"c1", s.constants.c1},
        {"c2", s.constants.c2},
        {"c_ceiling", s.constants.c_ceiling},
        {"c_test", s.constants.c_test}}},
  };
}

std::string format_real(Real value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string render_csv(const CsvTable& table, const json& metadata) {
  std::ostringstream out;
  for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << table.columns[i];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
  for (const auto& item : metadata.items())
    out << "# " << item.key() << '=' << (item.value().is_string() ? item.value().get<std::string>() : item.value().dump())
        << '\n';
  return out.str();
}

CsvTable scaling_table(const ScalingDataset& data) {
  CsvTable table{kScalingColumns, {}};
  const Real nan = std::nan("");
  for (const CellStats& c : data.cells)
    table.rows.push_back({std::to_string(c.cell_id), std::to_string(c.m), format_real(c.b_min),
                          format_real(c.delta_omega), format_real(c.x_value), format_real(c.t_mean.value_or(nan)),
                          format_real(c.t_std.value_or(nan)), std::to_string(c.n_valid)});
  return table;
}

json dataset_to_json(const ScalingDataset& data) {
  json cells = json::array();
  for (const CellStats& c : data.cells)
    cells.push_back({{"cell_id", c.cell_id},
                     {"m", c.m},
                     {"b_min", c.b_min},
                     {"r", c.r},
                     {"delta_omega", c.delta_omega},
                     {"x_value", c.x_value},
                     {"t_mean", optional_real(c.t_mean)},
                     {"t_std", optional_real(c.t_std)},
                     {"n_valid", c.n_valid},
                     {"n_samples", c.n_samples}});
  json samples = json::array();
  for (const StoppingResult& s : data.samples)
    samples.push_back({{"cell_id", s.cell_id},
                       {"sample_index", s.sample_index},
                       {"seed", s.seed},
                       {"omega_sampled", s.omega_sampled},
                       {"d", s.d},
                       {"stop_time", optional_real(s.stop_time)},
                       {"final_statistic", s.final_statistic},
                       {"grid_exhausted", s.grid_exhausted},
                       {"clamp_events", s.clamp_events}});
  json fit = nullptr;
  if (data.fit) {
    const LogLogFit& f = *data.fit;
    fit = {{"slope", f.slope},
           {"intercept", f.intercept},
           {"residual_rms", f.residual_rms},
           {"slope_stderr", f.slope_stderr},
           {"ci95_low", f.ci95_low},
           {"ci95_high", f.ci95_high},
           {"n_points", f.n_points}};
  }
  return {{"cells", cells}, {"fit", fit}, {"samples", samples}, {"warnings", data.warnings}};
}

ScalingDataset dataset_from_json(const json& doc) {
  ScalingDataset data;
  for (const json& c : doc.at("cells")) {
    CellStats s;
    s.cell_id = c.at("cell_id").get<int>();
    s.m = c.at("m").get<int>();
    s.b_min = c.at("b_min").get<Real>();
    s.r = c.at("r").get<Real>();
    s.delta_omega = c.at("delta_omega").get<Real>();
    s.x_value = c.at("x_value").get<Real>();
    s.t_mean = read_optional(c.at("t_mean"));
    s.t_std = read_optional(c.at("t_std"));
    s.n_valid = c.at("n_valid").get<int>();
    s.n_samples = c.at("n_samples").get<int>();
    data.cells.push_back(s);
  }
  for (const json& s : doc.at("samples")) {
    StoppingResult r;
    r.cell_id = s.at("cell_id").get<int>();
    r.sample_index = s.at("sample_index").get<int>();
    r.seed = s.at("seed").get<Seed>();
    r.omega_sampled = s.at("omega_sampled").get<Real>();
    r.d = s.at("d").get<int>();
    r.stop_time = read_optional(s.at("stop_time"));
    r.final_statistic = s.at("final_statistic").get<Real>();
    r.grid_exhausted = s.at("grid_exhausted").get<bool>();
    r.clamp_events = s.at("clamp_events").get<int>();
    data.samples.push_back(r);
  }
  if (const json& f = doc.at("fit"); !f.is_null()) {
    LogLogFit fit;
    fit.slope = f.at("slope").get<Real>();
    fit.intercept = f.at("intercept").get<Real>();
    fit.residual_rms = f.at("residual_rms").get<Real>();
    fit.slope_stderr = f.at("slope_stderr").get<Real>();
    fit.ci95_low = f.at("ci95_low").get<Real>();
    fit.ci95_high = f.at("ci95_high").get<Real>();
    fit.n_points = f.at("n_points").get<int>();
    data.fit = fit;
  }
  data.warnings = doc.at("warnings").get<std::vector<std::string>>();
  return data;
}

json scaling_document(const ScalingDataset& data, const AppConfig& config) {
  return {{"metadata", run_metadata(config)}, {"config", config_to_json(config)}, {"results", dataset_to_json(data)}};
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

ScalingDataset load_scaling_json(const std::string& path) {
  const json doc = load_json_file(path);
  try {
    return dataset_from_json(doc.at("results"));
  } catch (const json::exception& e) {
    throw std::runtime_error("'" + path + "' is not a scaling document: " + e.what());
  }
}

}  // namespace bbsense
