#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rmfg/numkit.hpp"

namespace rmfg {

/// Column of a time-indexed CSV: `name` gets suffixes _0, _1, ... for vector values.
struct CsvColumn {
  std::string name;
  const Trajectory* values;
};

/// Header row, then one row per knot with t first. Numbers use 17 significant digits.
void write_trajectory_csv(const std::filesystem::path& path, const TimeGrid& grid,
                          const std::vector<CsvColumn>& columns);

void write_table_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

struct RunManifest {
  std::string config_path;
  std::string subcommand;
  nlohmann::json settings;
  std::string tool_version;
  double wall_seconds = 0.0;
  std::vector<std::string> outputs;

  nlohmann::json to_json() const;
};

const char* tool_version();

}  // namespace rmfg
