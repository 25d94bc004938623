#include "rmfg/config.hpp"

#include <fstream>
#include <sstream>

#include "rmfg/errors.hpp"

namespace rmfg {

using nlohmann::json;

namespace {

double number(const json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigError("field '" + field + "': expected a number, got " + j.dump());
  return j.get<double>();
}

Matrix parse_matrix(const json& j, const std::string& field) {
  if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) throw ConfigError("field '" + field + "': expected a number or nonempty array");
  if (!j.front().is_array()) {
    // flat array: a single row
    Matrix m(1, static_cast<Eigen::Index>(j.size()));
    for (std::size_t c = 0; c < j.size(); ++c) m(0, static_cast<Eigen::Index>(c)) = number(j[c], field + "[" + std::to_string(c) + "]");
    return m;
  }
  const auto rows = j.size();
  const auto cols = j.front().size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw ConfigError("field '" + field + "': row " + std::to_string(r) + " has inconsistent length");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          number(j[r][c], field + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
    }
  }
  return m;
}

Vector parse_vector(const json& j, const std::string& field) {
  Matrix m = parse_matrix(j, field);
  if (m.rows() == 1) return m.transpose();
  if (m.cols() == 1) return m;
  throw ConfigError("field '" + field + "': expected a vector");
}

const json& required(const json& root, const char* field) {
  if (!root.contains(field)) throw ConfigError("missing required field '" + std::string(field) + "'");
  return root.at(field);
}

json vector_to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

}  // namespace

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Config parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("parse error: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config must be a JSON object");

  Config c;
  auto& p = c.params;
  p.A = parse_matrix(required(root, "A"), "A");
  const auto n = p.A.rows();
  p.B = parse_matrix(required(root, "B"), "B");
  if (p.B.rows() == 1 && n > 1 && p.B.cols() == n) p.B.transposeInPlace();
  p.Q = parse_matrix(required(root, "Q"), "Q");
  p.R = parse_matrix(required(root, "R"), "R");
  p.gamma = number(required(root, "gamma"), "gamma");
  p.T = number(required(root, "T"), "T");
  p.G = root.contains("G") ? parse_matrix(root["G"], "G") : Matrix::Zero(n, n);
  p.D = root.contains("D") ? parse_matrix(root["D"], "D") : Matrix::Zero(n, n);
  p.Gamma = root.contains("Gamma") ? parse_matrix(root["Gamma"], "Gamma") : Matrix::Zero(n, n);
  p.eta = root.contains("eta") ? parse_vector(root["eta"], "eta") : Vector::Zero(n);
  p.H = root.contains("H") ? parse_matrix(root["H"], "H") : Matrix::Zero(n, n);
  p.m0 = root.contains("m0") ? parse_vector(root["m0"], "m0") : Vector::Zero(n);

  if (root.contains("init")) {
    const auto& ji = root["init"];
    const std::string mode = ji.value("mode", "shared");
    if (mode == "shared") {
      c.init.mode = InitMode::Shared;
      if (ji.contains("value")) c.init.shared = parse_vector(ji["value"], "init.value");
    } else if (mode == "deterministic") {
      c.init.mode = InitMode::Deterministic;
      const auto& pts = required(ji, "points");
      for (std::size_t i = 0; i < pts.size(); ++i) {
        c.init.points.push_back(parse_vector(pts[i], "init.points[" + std::to_string(i) + "]"));
      }
    } else if (mode == "random") {
      c.init.mode = InitMode::Random;
      const auto& means = required(ji, "means");
      for (std::size_t i = 0; i < means.size(); ++i) {
        c.init.means.push_back(parse_vector(means[i], "init.means[" + std::to_string(i) + "]"));
      }
      if (ji.contains("covariances")) {
        const auto& covs = ji["covariances"];
        for (std::size_t i = 0; i < covs.size(); ++i) {
          c.init.covariances.push_back(parse_matrix(covs[i], "init.covariances[" + std::to_string(i) + "]"));
        }
      }
    } else {
      throw ConfigError("field 'init.mode': unknown mode '" + mode + "'");
    }
  }

  if (root.contains("solver")) {
    const auto& js = root["solver"];
    auto get_int = [&](const char* key, int& slot) {
      if (!js.contains(key)) return;
      if (!js[key].is_number_integer()) throw ConfigError(std::string("field 'solver.") + key + "': expected an integer");
      slot = js[key].get<int>();
    };
    get_int("n_steps", c.solver.n_steps);
    get_int("h2_basis", c.solver.h2_basis);
    get_int("fp_max_iter", c.solver.fp_max_iter);
    if (js.contains("fp_tol")) c.solver.fp_tol = number(js["fp_tol"], "solver.fp_tol");
  }
  if (c.solver.n_steps < 2) throw ConfigError("field 'solver.n_steps': must be at least 2");
  if (c.solver.h2_basis < 1) throw ConfigError("field 'solver.h2_basis': must be positive");
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

json to_json(const Config& c) {
  const auto& p = c.params;
  json j;
  j["A"] = matrix_to_json(p.A);
  j["B"] = matrix_to_json(p.B);
  j["G"] = matrix_to_json(p.G);
  j["D"] = matrix_to_json(p.D);
  j["Gamma"] = matrix_to_json(p.Gamma);
  j["eta"] = vector_to_json(p.eta);
  j["Q"] = matrix_to_json(p.Q);
  j["R"] = matrix_to_json(p.R);
  j["gamma"] = p.gamma;
  j["H"] = matrix_to_json(p.H);
  j["T"] = p.T;
  j["m0"] = vector_to_json(p.m0);
  json ji;
  switch (c.init.mode) {
    case InitMode::Shared:
      ji["mode"] = "shared";
      if (c.init.shared) ji["value"] = vector_to_json(*c.init.shared);
      break;
    case InitMode::Deterministic: {
      ji["mode"] = "deterministic";
      json pts = json::array();
      for (const auto& v : c.init.points) pts.push_back(vector_to_json(v));
      ji["points"] = pts;
      break;
    }
    case InitMode::Random: {
      ji["mode"] = "random";
      json means = json::array();
      for (const auto& v : c.init.means) means.push_back(vector_to_json(v));
      ji["means"] = means;
      json covs = json::array();
      for (const auto& m : c.init.covariances) covs.push_back(matrix_to_json(m));
      ji["covariances"] = covs;
      break;
    }
  }
  j["init"] = ji;
  j["solver"] = {{"n_steps", c.solver.n_steps},
                 {"h2_basis", c.solver.h2_basis},
                 {"fp_tol", c.solver.fp_tol},
                 {"fp_max_iter", c.solver.fp_max_iter}};
  return j;
}

void save_config(const Config& c, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config file '" + path.string() + "'");
  out << to_json(c).dump(2) << "\n";
}

}  // namespace rmfg
