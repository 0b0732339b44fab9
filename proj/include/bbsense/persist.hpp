#pragma once

// CSV and JSON output. CSV files start with the column header line; run
// metadata follows the data as '#' comment lines. JSON files hold
// {metadata, config, results} and reload to bit-identical datasets.

#include "bbsense/config.hpp"
#include "bbsense/experiment_harness.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace bbsense {

inline const std::vector<std::string> kScalingColumns{"cell_id", "m",      "b_min",  "delta_omega",
                                                      "x_value", "t_mean", "t_std",  "n_valid"};

/// Version, unit convention, seed_root, thresholds and constants of a run.
nlohmann::json run_metadata(const AppConfig& config);

/// Shortest text that parses back to the same double; "nan" for NaN.
std::string format_real(Real value);

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

std::string render_csv(const CsvTable& table, const nlohmann::json& metadata);

CsvTable scaling_table(const ScalingDataset& data);

nlohmann::json dataset_to_json(const ScalingDataset& data);
ScalingDataset dataset_from_json(const nlohmann::json& doc);

/// {metadata, config, results}.
nlohmann::json scaling_document(const ScalingDataset& data, const AppConfig& config);

/// Writes the text, raising std::runtime_error that names the path on failure.
void write_text_file(const std::string& path, const std::string& text);

/// Reads the results section of a document written by scaling_document.
ScalingDataset load_scaling_json(const std::string& path);

}  // namespace bbsense
