#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "rmfg/model.hpp"

namespace rmfg {

struct Config {
  ModelParams params;
  InitSpec init;
  SolverSettings solver;
};

/// Parses a JSON document. Matrices are nested row arrays; a bare number is a 1x1 matrix and
/// a flat array is a column vector where a vector is expected. Missing optional fields
/// (G, D, Gamma, eta, H, m0, init, solver) get zero/default values.
Config parse_config(const std::string& text);
Config load_config(const std::filesystem::path& path);

nlohmann::json to_json(const Config& c);
void save_config(const Config& c, const std::filesystem::path& path);

nlohmann::json matrix_to_json(const Matrix& m);

}  // namespace rmfg
