#include "rmfg/report.hpp"

#include <fstream>
#include <iomanip>

#include "rmfg/errors.hpp"

namespace rmfg {

namespace {

std::ofstream open(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << std::setprecision(17);
  return out;
}

}  // namespace

void write_trajectory_csv(const std::filesystem::path& path, const TimeGrid& grid,
                          const std::vector<CsvColumn>& columns) {
  auto out = open(path);
  out << "t";
  for (const auto& c : columns) {
    if (!(c.values->grid() == grid)) throw ShapeError("column '" + c.name + "' is on a different grid");
    const auto size = c.values->rows() * c.values->cols();
    if (size == 1) {
      out << "," << c.name;
    } else {
      for (Eigen::Index i = 0; i < size; ++i) out << "," << c.name << "_" << i;
    }
  }
  out << "\n";
  for (std::size_t k = 0; k < grid.size(); ++k) {
    out << grid.knot(k);
    for (const auto& c : columns) {
      const Matrix& v = (*c.values)[k];
      // column-major flattening
      for (Eigen::Index i = 0; i < v.size(); ++i) out << "," << v.data()[i];
    }
    out << "\n";
  }
}

void write_table_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows) {
  auto out = open(path);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  auto out = open(path);
  out << j.dump(2) << "\n";
}

nlohmann::json RunManifest::to_json() const {
  return {{"config", config_path}, {"subcommand", subcommand}, {"settings", settings},
          {"tool_version", tool_version}, {"wall_seconds", wall_seconds}, {"outputs", outputs}};
}

const char* tool_version() { return "0.1.0"; }

}  // namespace rmfg
