#pragma once

// JSON persistence for synthesis configs and designs.
//
// Matrices are stored as {"rows": r, "cols": c, "data": [row-major]}; nested
// row arrays are also accepted on input. A design document echoes every
// synthesis input so it can be verified without re-running the solver.

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "uvc/lmi_core.hpp"
#include "uvc/models.hpp"

namespace uvc::io {

using Json = nlohmann::json;

inline constexpr int format_version = 1;

inline Json matrix_to_json(const Matrix& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

inline Json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

namespace detail {

inline double number(const Json& j, const std::string& what) {
  if (!j.is_number()) throw InvalidArgument(what + " must be a number");
  return j.get<double>();
}

inline const Json& field(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw InvalidArgument(where + ": missing field '" + key + "'");
  return j.at(key);
}

}  // namespace detail

inline Matrix matrix_from_json(const Json& j, const std::string& what = "matrix") {
  if (j.is_object()) {
    const auto rows = detail::field(j, "rows", what).get<long>();
    const auto cols = detail::field(j, "cols", what).get<long>();
    const Json& data = detail::field(j, "data", what);
    if (rows < 0 || cols < 0 || !data.is_array() || static_cast<long>(data.size()) != rows * cols)
      throw InvalidArgument(what + ": data length must equal rows * cols");
    Matrix m(rows, cols);
    for (long k = 0; k < rows * cols; ++k) m(k / cols, k % cols) = detail::number(data[static_cast<std::size_t>(k)], what);
    return m;
  }
  if (j.is_array() && !j.empty() && j.front().is_array()) {
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j.front().size());
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const Json& row = j[static_cast<std::size_t>(r)];
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
        throw InvalidArgument(what + ": rows have different lengths");
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = detail::number(row[static_cast<std::size_t>(c)], what);
    }
    return m;
  }
  throw InvalidArgument(what + ": expected {rows, cols, data} or an array of rows");
}

inline Vector vector_from_json(const Json& j, const std::string& what = "vector") {
  if (!j.is_array()) throw InvalidArgument(what + " must be an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Eigen::Index>(k)) = detail::number(j[k], what);
  return v;
}

inline Json system_to_json(const PolytopicSystem& s) {
  Json vertices = Json::array();
  for (const auto& v : s.vertices()) vertices.push_back(matrix_to_json(v));
  return Json{{"n", s.states()}, {"m", s.inputs()}, {"vertices", vertices}};
}

/// Explicit vertices, or {"model": "manipulator" | "rov", ...parameters}.
inline PolytopicSystem system_from_json(const Json& j) {
  if (!j.is_object()) throw InvalidArgument("system must be an object");
  if (j.contains("model")) {
    const std::string name = j.at("model").get<std::string>();
    auto get = [&](const char* key, double fallback) {
      return j.contains(key) ? detail::number(j.at(key), std::string("system.") + key) : fallback;
    };
    if (name == "manipulator") {
      return models::manipulator_polytope(get("phi_bar", std::numbers::pi / 6), get("delta_bar", std::numbers::pi / 4));
    }
    if (name == "rov") {
      models::RovParameters p;
      p.mass = get("mass", p.mass);
      p.inertia = get("inertia", p.inertia);
      p.psi1 = get("psi1", p.psi1);
      p.psi2 = get("psi2", p.psi2);
      p.gain_lo = get("gain_lo", p.gain_lo);
      p.gain_hi = get("gain_hi", p.gain_hi);
      return models::rov_polytope(p);
    }
    throw InvalidArgument("unknown model '" + name + "'");
  }
  const Json& verts = detail::field(j, "vertices", "system");
  if (!verts.is_array() || verts.empty()) throw InvalidArgument("system.vertices must be a non-empty array");
  std::vector<Matrix> vertices;
  for (std::size_t i = 0; i < verts.size(); ++i)
    vertices.push_back(matrix_from_json(verts[i], "system.vertices[" + std::to_string(i) + "]"));
  PolytopicSystem sys(std::move(vertices));
  if (j.contains("n") && j.at("n").get<int>() != sys.states())
    throw InvalidArgument("system.n does not match the vertex row count");
  if (j.contains("m") && j.at("m").get<int>() != sys.inputs())
    throw InvalidArgument("system.m does not match the vertex column count");
  return sys;
}

/// A scalar is broadcast to every input channel.
inline SaturationLimits limits_from_json(const Json& j, int m) {
  if (j.is_number()) return SaturationLimits::uniform(m, j.get<double>());
  Vector v = vector_from_json(j, "u_bar");
  if (v.size() != m) throw InvalidArgument("u_bar length differs from the input count");
  return SaturationLimits(std::move(v));
}

struct SynthesisConfig {
  PolytopicSystem system;
  SaturationLimits u_bar;
  SynthesisParameters params;
  bool mu_given = false;  ///< false: search the default mu grid
  std::uint64_t seed = 0;
};

inline SynthesisConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
  try {
    PolytopicSystem system = system_from_json(detail::field(j, "system", "config"));
    SaturationLimits limits = limits_from_json(detail::field(j, "u_bar", "config"), system.inputs());
    SynthesisParameters params;
    const bool mu_given = j.contains("mu");
    if (mu_given) params.mu = detail::number(j.at("mu"), "mu");
    params.rho = detail::number(detail::field(j, "rho", "config"), "rho");
    if (j.contains("solver")) {
      const Json& s = j.at("solver");
      if (s.contains("tol")) params.solver.tol = detail::number(s.at("tol"), "solver.tol");
      if (s.contains("max_iterations")) params.solver.max_iterations = s.at("max_iterations").get<int>();
      if (s.contains("eps_strict")) params.eps_strict = detail::number(s.at("eps_strict"), "solver.eps_strict");
    }
    const std::uint64_t seed = j.contains("seed") ? j.at("seed").get<std::uint64_t>() : 0;
    params.validate();
    return SynthesisConfig{std::move(system), std::move(limits), params, mu_given, seed};
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
}

inline Json design_to_json(const ControllerDesign& d) {
  Json residual_blocks = Json::array();
  for (const auto& b : d.residuals.blocks)
    residual_blocks.push_back(Json{{"label", b.label}, {"min_eigenvalue", b.min_eigenvalue}});
  return Json{
      {"format_version", format_version},
      {"kind", "uvc_design"},
      {"system", system_to_json(d.system)},
      {"u_bar", vector_to_json(d.u_bar.values())},
      {"mu", d.mu},
      {"rho", d.rho},
      {"eps_strict", d.eps_strict},
      {"phi", d.phi},
      {"K", matrix_to_json(d.K)},
      {"L", matrix_to_json(d.L)},
      {"P", matrix_to_json(d.P)},
      {"Q", matrix_to_json(d.Q)},
      {"S", vector_to_json(d.S)},
      {"decision", vector_to_json(d.decision)},
      {"solver_iterations", d.solver_iterations},
      {"residuals", Json{{"blocks", residual_blocks}, {"max_violation", d.residuals.max_violation}}},
  };
}

inline ControllerDesign design_from_json(const Json& j) {
  try {
    if (!j.is_object() || j.value("kind", std::string()) != "uvc_design")
      throw InvalidArgument("not a design document");
    const int version = detail::field(j, "format_version", "design").get<int>();
    if (version != format_version) throw InvalidArgument("unsupported design format_version " + std::to_string(version));

    PolytopicSystem system = system_from_json(j.at("system"));
    SaturationLimits limits = limits_from_json(j.at("u_bar"), system.inputs());
    ResidualReport report;
    if (j.contains("residuals")) {
      for (const auto& b : j.at("residuals").at("blocks"))
        report.blocks.push_back({b.at("label").get<std::string>(), b.at("min_eigenvalue").get<double>()});
      report.max_violation = j.at("residuals").at("max_violation").get<double>();
    }
    ControllerDesign d{
        matrix_from_json(j.at("K"), "K"),
        matrix_from_json(j.at("L"), "L"),
        matrix_from_json(j.at("P"), "P"),
        matrix_from_json(j.at("Q"), "Q"),
        vector_from_json(j.at("S"), "S"),
        j.at("phi").get<double>(),
        j.at("mu").get<double>(),
        j.at("rho").get<double>(),
        j.at("eps_strict").get<double>(),
        std::move(limits),
        std::move(system),
        std::move(report),
        j.value("solver_iterations", 0),
        j.contains("decision") ? vector_from_json(j.at("decision"), "decision") : Vector(),
    };
    const int n = d.system.states(), m = d.system.inputs();
    auto shape = [](const Matrix& a, int r, int c, const char* name) {
      if (a.rows() != r || a.cols() != c) throw InvalidArgument(std::string("design ") + name + " has the wrong shape");
    };
    shape(d.K, m, n, "K");
    shape(d.L, m, n, "L");
    shape(d.P, n, n, "P");
    shape(d.Q, n, n, "Q");
    if (d.S.size() != m) throw InvalidArgument("design S has the wrong length");
    if (d.decision.size() != 0 && d.decision.size() != DecisionLayout(n, m).total_vars())
      throw InvalidArgument("design decision vector has the wrong length");
    return d;
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("design: ") + e.what());
  }
}

inline Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InvalidArgument("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  out << text;
  if (!out) throw InvalidArgument("write to '" + path + "' failed");
}

inline void write_json(const std::string& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

}  // namespace uvc::io
