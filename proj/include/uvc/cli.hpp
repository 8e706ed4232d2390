#pragma once

// Command-line front end: synth, sim, region, verify, models.
//
// Exit codes: 0 success, 1 no design (or a design that fails verification),
// 2 invalid input, 3 numerical failure.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "uvc/analysis.hpp"
#include "uvc/io.hpp"
#include "uvc/models.hpp"
#include "uvc/simulation.hpp"
#include "uvc/synthesis.hpp"

namespace uvc::cli {

enum ExitCode : int { ok = 0, no_design = 1, invalid_input = 2, numerical_failure = 3 };

namespace detail {

inline std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw InvalidArgument(what + ": '" + item + "' is not a number");
    }
    if (item.find_first_not_of(" \t", used) != std::string::npos)
      throw InvalidArgument(what + ": '" + item + "' is not a number");
    out.push_back(v);
  }
  if (out.empty()) throw InvalidArgument(what + " is empty");
  return out;
}

inline Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// "lo:hi:count"
inline std::vector<double> parse_grid(const std::string& text) {
  const auto a = text.find(':');
  const auto b = text.find(':', a == std::string::npos ? a : a + 1);
  if (a == std::string::npos || b == std::string::npos) throw InvalidArgument("--mu-grid expects lo:hi:count");
  const double lo = parse_list(text.substr(0, a), "--mu-grid lo").front();
  const double hi = parse_list(text.substr(a + 1, b - a - 1), "--mu-grid hi").front();
  const double count = parse_list(text.substr(b + 1), "--mu-grid count").front();
  if (count != std::floor(count) || count < 1) throw InvalidArgument("--mu-grid count must be a positive integer");
  return log_grid(lo, hi, static_cast<int>(count));
}

/// "key=value,key=value"
inline std::vector<std::pair<std::string, double>> parse_params(const std::string& text) {
  std::vector<std::pair<std::string, double>> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw InvalidArgument("--params expects key=value pairs, got '" + item + "'");
    out.emplace_back(item.substr(0, eq), parse_list(item.substr(eq + 1), item.substr(0, eq)).front());
  }
  return out;
}

inline std::string format_matrix(const Matrix& m, int indent = 4) {
  std::ostringstream os;
  os << std::setprecision(6);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    os << std::string(static_cast<std::size_t>(indent), ' ') << '[';
    for (Eigen::Index c = 0; c < m.cols(); ++c) os << (c ? ", " : "") << std::setw(12) << m(r, c);
    os << "]\n";
  }
  return os.str();
}

inline std::string format_row(const Vector& v) {
  std::ostringstream os;
  os << std::setprecision(6) << '[';
  for (Eigen::Index k = 0; k < v.size(); ++k) os << (k ? ", " : "") << v(k);
  os << ']';
  return os.str();
}

inline void print_design(std::ostream& out, const ControllerDesign& d) {
  out << std::setprecision(8);
  out << "mu = " << d.mu << ", rho = " << d.rho << ", phi = " << d.phi << ", solver iterations = "
      << d.solver_iterations << '\n';
  out << "K =\n" << format_matrix(d.K);
  out << "||K||_2 = " << spectral_norm(d.K) << '\n';
  out << "P =\n" << format_matrix(d.P);
  out << "lambda_min(Q) = " << smallest_eigenvalue(d.Q) << '\n';
  out << "inclusion margins = " << format_row(inclusion_margins(d)) << '\n';
  out << "max LMI violation = " << d.residuals.max_violation << '\n';
}

/// Selected simplex weights for sim/verify.
inline std::vector<SimplexWeights> pick_weights(const PolytopicSystem& sys, const std::string& alpha,
                                                std::optional<int> vertex, int random_count, std::uint64_t seed) {
  std::vector<SimplexWeights> out;
  if (!alpha.empty()) {
    const Vector a = to_vector(parse_list(alpha, "--alpha"));
    if (a.size() != sys.vertex_count()) throw InvalidArgument("--alpha length differs from the vertex count");
    out.emplace_back(a);
  } else if (vertex) {
    if (*vertex < 1 || *vertex > sys.vertex_count()) throw InvalidArgument("--vertex is out of range (1-based)");
    out.push_back(SimplexWeights::vertex(sys.vertex_count(), *vertex - 1));
  } else if (random_count > 0) {
    out = sample_simplex(sys.vertex_count(), random_count, seed);
  } else {
    for (int i = 0; i < sys.vertex_count(); ++i) out.push_back(SimplexWeights::vertex(sys.vertex_count(), i));
  }
  return out;
}

inline SynthesisParameters design_parameters(const ControllerDesign& d) {
  SynthesisParameters p;
  p.mu = d.mu;
  p.rho = d.rho;
  p.eps_strict = d.eps_strict;
  return p;
}

}  // namespace detail

// ---------------------------------------------------------------------------

struct SynthOptions {
  std::string config;
  std::optional<double> mu;
  std::string mu_grid;
  std::string out;
};

inline int cmd_synth(const SynthOptions& o, std::ostream& out, std::ostream& err) {
  const io::SynthesisConfig cfg = io::config_from_json(io::read_json(o.config));
  SynthesisParameters params = cfg.params;

  std::vector<double> grid;
  if (!o.mu_grid.empty())
    grid = detail::parse_grid(o.mu_grid);
  else if (o.mu)
    params.mu = *o.mu;
  else if (!cfg.mu_given)
    grid = default_mu_grid();

  const auto start = std::chrono::steady_clock::now();
  std::optional<ControllerDesign> design;
  try {
    if (grid.empty()) {
      design = synthesize(cfg.system, cfg.u_bar, params);
    } else {
      GridSearchResult res = mu_grid_search(cfg.system, cfg.u_bar, params.rho, grid, params);
      out << "mu grid:\n" << format_grid_report(res.report);
      design = std::move(res.design);
    }
  } catch (const NoDesign& e) {
    err << e.what() << '\n' << e.report();
    return no_design;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  detail::print_design(out, *design);
  out << "synthesis time = " << std::setprecision(3) << seconds << " s\n";
  if (!o.out.empty()) {
    io::write_json(o.out, io::design_to_json(*design));
    out << "design written to " << o.out << '\n';
  }
  return ok;
}

struct SimOptions {
  std::string design;
  std::string x0;
  std::string alpha;
  std::optional<int> vertex;
  int random_alpha = 0;
  std::optional<double> step;
  std::optional<double> tmax;
  int stride = 1;
  std::uint64_t seed = 0;
  std::string out;
};

inline int cmd_sim(const SimOptions& o, std::ostream& out, std::ostream&) {
  const ControllerDesign d = io::design_from_json(io::read_json(o.design));
  const Vector x0 = detail::to_vector(detail::parse_list(o.x0, "--x0"));
  if (x0.size() != d.states()) throw InvalidArgument("--x0 length differs from the state dimension");
  const auto weights = detail::pick_weights(d.system, o.alpha, o.vertex, o.random_alpha, o.seed);

  IntegratorSettings settings;
  settings.step = o.step.value_or(1e-4);
  settings.t_max = o.tmax.value_or(2.0 * d.rho);
  settings.record_stride = o.stride;

  std::vector<Trajectory> runs(weights.size());
  parallel_for(weights.size(), [&](std::size_t k) {
    runs[k] = simulate(blend_vertices(d.system, weights[k]), d.K, d.u_bar, x0, settings, d.P);
  });

  out << std::setprecision(6);
  out << "V(x0) = " << lyapunov_value(d, x0) << ", reaching-time bound = " << reaching_time_bound(d, x0) << " s\n";
  for (std::size_t k = 0; k < runs.size(); ++k) {
    out << "case " << k << ": alpha = " << detail::format_row(weights[k].values()) << ", reach time = ";
    if (runs[k].reach_time)
      out << *runs[k].reach_time << " s";
    else
      out << "not reached by " << settings.t_max << " s";
    out << ", longest saturation =";
    for (int l = 0; l < d.inputs(); ++l) out << ' ' << longest_saturation(runs[k], d.u_bar, l);
    out << " s\n";
  }

  if (!o.out.empty()) {
    const bool multi = runs.size() > 1;
    std::ostringstream csv;
    csv << std::setprecision(17);
    if (multi) csv << "case,";
    csv << 't';
    for (int i = 1; i <= d.states(); ++i) csv << ",sigma_" << i;
    for (int l = 1; l <= d.inputs(); ++l) csv << ",u_" << l;
    for (int l = 1; l <= d.inputs(); ++l) csv << ",sat_u_" << l;
    csv << ",V\n";
    for (std::size_t k = 0; k < runs.size(); ++k) {
      const Trajectory& tr = runs[k];
      for (std::size_t s = 0; s < tr.size(); ++s) {
        if (multi) csv << k << ',';
        csv << tr.times[s];
        for (Eigen::Index i = 0; i < tr.states[s].size(); ++i) csv << ',' << tr.states[s](i);
        for (Eigen::Index l = 0; l < tr.inputs[s].size(); ++l) csv << ',' << tr.inputs[s](l);
        for (Eigen::Index l = 0; l < tr.sat_inputs[s].size(); ++l) csv << ',' << tr.sat_inputs[s](l);
        csv << ',' << tr.lyapunov[s] << '\n';
      }
    }
    io::write_text(o.out, csv.str());
    out << "trajectory written to " << o.out << '\n';
  }
  return ok;
}

struct RegionOptions {
  std::string design;
  int samples = 720;
  double radius_factor = 10.0;
  std::uint64_t seed = 0;
  std::string out;
};

inline int cmd_region(const RegionOptions& o, std::ostream& out, std::ostream&) {
  const ControllerDesign d = io::design_from_json(io::read_json(o.design));
  const RegionSample r = omega_boundary(d, sample_directions(d.states(), o.samples, o.seed), o.radius_factor);

  std::ostringstream csv;
  csv << std::setprecision(17);
  for (int i = 1; i <= d.states(); ++i) csv << "dir_" << i << ',';
  csv << "omega_radius,du_admissible\n";
  int admissible = 0;
  for (std::size_t k = 0; k < r.directions.size(); ++k) {
    for (Eigen::Index i = 0; i < r.directions[k].size(); ++i) csv << r.directions[k](i) << ',';
    csv << r.omega_radius[k] << ',' << (r.du_admissible[k] ? 1 : 0) << '\n';
    admissible += r.du_admissible[k] ? 1 : 0;
  }
  if (o.out.empty()) {
    out << csv.str();
    return ok;
  }
  io::write_text(o.out, csv.str());
  const auto [lo, hi] = std::minmax_element(r.omega_radius.begin(), r.omega_radius.end());
  out << std::setprecision(6) << r.directions.size() << " directions, omega radius in [" << *lo << ", " << *hi
      << "], " << admissible << " directionally admissible, D_u plot radius " << r.du_plot_radius << '\n';
  out << "region written to " << o.out << '\n';
  return ok;
}

struct VerifyOptions {
  std::string design;
  int boundary_points = 64;
  int random_alpha = 10;
  std::uint64_t seed = 0;
  std::optional<double> step;
};

/// One row of the verification table.
struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
  bool informational = false;  ///< reported but not part of the verdict
};

inline std::vector<Check> verify_design(const ControllerDesign& d, const VerifyOptions& o) {
  std::vector<Check> checks;
  auto num = [](double v) {
    std::ostringstream os;
    os << std::setprecision(6) << v;
    return os.str();
  };

  if (d.decision.size() > 0) {
    const DecisionLayout layout(d.states(), d.inputs());
    const LmiProgram prog = assemble_program(d.system, d.u_bar, detail::design_parameters(d), layout);
    const double v = residuals(prog, d.decision).max_violation;
    checks.push_back({"LMI residuals <= 1e-8", v <= 1e-8, "max violation " + num(v)});
  }
  const CertificateCheck c = certify(d, 0.0);
  checks.push_back({"P positive definite", c.p_positive(), "lambda_min " + num(c.p_min_eigenvalue)});
  checks.push_back({"Q positive definite", c.q_positive(), "lambda_min " + num(c.q_min_eigenvalue)});
  checks.push_back({"lambda_min(Q) >= 1/rho - 1e-6", c.q_min_eigenvalue >= 1.0 / d.rho - 1e-6,
                    num(c.q_min_eigenvalue) + " vs " + num(1.0 / d.rho)});
  const double margin = c.margins.size() ? c.margins.minCoeff() : 0.0;
  checks.push_back({"inclusion margins >= -1e-8", c.p_positive() && margin >= -1e-8, "min " + num(margin)});
  checks.push_back({"P <= phi I", c.p_max_eigenvalue <= d.phi * (1.0 + 1e-8) + 1e-8,
                    "lambda_max(P) " + num(c.p_max_eigenvalue) + ", phi " + num(d.phi)});
  if (!c.p_positive()) return checks;

  const auto dirs = sample_directions(d.states(), 720, o.seed);
  int directional = 0;
  for (const auto& dir : dirs) directional += du_contains(d, dir) ? 1 : 0;
  checks.push_back({"directional D_u test on unit directions", directional == static_cast<int>(dirs.size()),
                    std::to_string(directional) + "/" + std::to_string(dirs.size()) + " admissible", true});

  std::vector<SimplexWeights> weights;
  for (int i = 0; i < d.system.vertex_count(); ++i)
    weights.push_back(SimplexWeights::vertex(d.system.vertex_count(), i));
  for (auto& w : sample_simplex(d.system.vertex_count(), o.random_alpha, o.seed)) weights.push_back(std::move(w));

  IntegratorSettings settings;
  settings.step = o.step.value_or(1e-4 * d.rho);
  settings.t_max = 2.0 * d.rho;
  const auto points = omega_boundary_points(d, sample_directions(d.states(), o.boundary_points, o.seed));
  const BatchReport rep = batch_verify(d, d.system, points, weights, settings);

  const std::string cases = std::to_string(rep.cases.size()) + " cases";
  checks.push_back({"boundary sweep: all reach", rep.unreached == 0 && rep.failures == 0,
                    cases + ", " + std::to_string(rep.unreached) + " unreached, " + std::to_string(rep.failures) +
                        " errors"});
  checks.push_back({"boundary sweep: reach <= 1.05 rho", rep.max_reach_time <= 1.05 * d.rho,
                    "max reach " + num(rep.max_reach_time) + " s"});
  checks.push_back({"boundary sweep: reach <= 1.05 bound", rep.bound_exceedances(0.05) == 0,
                    std::to_string(rep.bound_exceedances(0.05)) + " exceedances"});
  checks.push_back({"boundary sweep: V non-increasing", rep.lyapunov_violations == 0,
                    std::to_string(rep.lyapunov_violations) + " increases above 1e-6"});
  return checks;
}

inline int cmd_verify(const VerifyOptions& o, std::ostream& out, std::ostream&) {
  const ControllerDesign d = io::design_from_json(io::read_json(o.design));
  const auto checks = verify_design(d, o);
  bool all = true;
  std::size_t width = 0;
  for (const auto& c : checks) width = std::max(width, c.name.size());
  for (const auto& c : checks) {
    out << (c.informational ? "INFO  " : c.pass ? "PASS  " : "FAIL  ") << std::left << std::setw(static_cast<int>(width)) << c.name << "  "
        << c.detail << '\n';
    all = all && (c.pass || c.informational);
  }
  return all ? ok : no_design;
}

struct ModelsOptions {
  std::string name;
  std::string params;
  std::string out;
};

inline int cmd_models_list(std::ostream& out) {
  out << "manipulator  phi_bar=0.5235987755982988 delta_bar=0.7853981633974483  (n=2, m=2, 4 vertices)\n"
         "rov          mass=290 inertia=290 psi1=0.7071067811865476 psi2=0.35 gain_lo=0.5 gain_hi=1"
         "  (n=3, m=4, 4 vertices)\n";
  return ok;
}

/// Writes a synthesis config with explicit vertices and the model's default limits.
inline int cmd_models_emit(const ModelsOptions& o, std::ostream& out) {
  io::Json sys{{"model", o.name}};
  for (const auto& [k, v] : detail::parse_params(o.params)) sys[k] = v;
  const std::vector<std::string> allowed =
      o.name == "manipulator" ? std::vector<std::string>{"model", "phi_bar", "delta_bar"}
      : o.name == "rov" ? std::vector<std::string>{"model", "mass", "inertia", "psi1", "psi2", "gain_lo", "gain_hi"}
                        : std::vector<std::string>{};
  if (allowed.empty()) throw InvalidArgument("unknown model '" + o.name + "' (see 'uvc models list')");
  for (const auto& item : sys.items())
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
      throw InvalidArgument("model '" + o.name + "' has no parameter '" + item.key() + "'");

  const PolytopicSystem system = io::system_from_json(sys);
  io::Json cfg{{"format_version", io::format_version}, {"model", sys}, {"system", io::system_to_json(system)}};
  if (o.name == "manipulator") {
    cfg["u_bar"] = {2.0, 2.0};
    cfg["mu"] = 3.0;
    cfg["rho"] = 1.0;
  } else {
    cfg["u_bar"] = std::vector<double>(4, 30.0);
    cfg["rho"] = 10.0;
  }
  if (o.out.empty()) {
    out << cfg.dump(2) << '\n';
  } else {
    io::write_json(o.out, cfg);
    out << "config written to " << o.out << '\n';
  }
  return ok;
}

// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"UVC gain synthesis for polytopic systems with saturating actuators", "uvc"};
  app.require_subcommand(1);

  SynthOptions synth;
  auto* s = app.add_subcommand("synth", "solve the synthesis LMI program");
  s->add_option("--config", synth.config, "config JSON")->required();
  auto* mu_opt = s->add_option("--mu", synth.mu, "fixed mu (overrides the config)");
  s->add_option("--mu-grid", synth.mu_grid, "log-spaced mu grid lo:hi:count")->excludes(mu_opt);
  s->add_option("--out", synth.out, "design JSON output");

  SimOptions sim;
  auto* si = app.add_subcommand("sim", "simulate the saturated closed loop");
  si->add_option("--design", sim.design, "design JSON")->required();
  si->add_option("--x0", sim.x0, "initial state v1,...,vn")->required();
  auto* a1 = si->add_option("--alpha", sim.alpha, "simplex weights a1,...,aN");
  auto* a2 = si->add_option("--vertex", sim.vertex, "vertex index (1-based)");
  auto* a3 = si->add_option("--random-alpha", sim.random_alpha, "number of random simplex weights");
  a1->excludes(a2, a3);
  a2->excludes(a3);
  si->add_option("--step", sim.step, "RK4 step (s)");
  si->add_option("--tmax", sim.tmax, "horizon (s), default 2 rho");
  si->add_option("--stride", sim.stride, "record every k-th step");
  si->add_option("--seed", sim.seed, "seed for --random-alpha");
  si->add_option("--out", sim.out, "trajectory CSV output");

  RegionOptions region;
  auto* r = app.add_subcommand("region", "sample the boundary of Omega and D_u admissibility");
  r->add_option("--design", region.design, "design JSON")->required();
  r->add_option("--samples", region.samples, "number of directions")->required();
  r->add_option("--radius-factor", region.radius_factor, "D_u plot radius as a multiple of the largest Omega radius");
  r->add_option("--seed", region.seed, "seed for directions when n > 3");
  r->add_option("--out", region.out, "region CSV output (stdout when omitted)");

  VerifyOptions verify;
  auto* v = app.add_subcommand("verify", "check certificate invariants and simulate from the boundary of Omega");
  v->add_option("--design", verify.design, "design JSON")->required();
  v->add_option("--boundary-points", verify.boundary_points, "initial points on the boundary of Omega");
  v->add_option("--random-alpha", verify.random_alpha, "random simplex weights besides the vertices");
  v->add_option("--seed", verify.seed, "seed for weights and directions");
  v->add_option("--step", verify.step, "RK4 step (s), default 1e-4 rho");

  ModelsOptions models_opt;
  auto* m = app.add_subcommand("models", "reference plant models");
  m->require_subcommand(1);
  auto* ml = m->add_subcommand("list", "list models and default parameters");
  auto* me = m->add_subcommand("emit", "write a synthesis config for a model");
  me->add_option("--name", models_opt.name, "manipulator | rov")->required();
  me->add_option("--params", models_opt.params, "key=value,... overrides");
  me->add_option("--out", models_opt.out, "config JSON output (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : invalid_input;
  }

  try {
    if (*s) return cmd_synth(synth, out, err);
    if (*si) return cmd_sim(sim, out, err);
    if (*r) return cmd_region(region, out, err);
    if (*v) return cmd_verify(verify, out, err);
    if (*ml) return cmd_models_list(out);
    if (*me) return cmd_models_emit(models_opt, out);
  } catch (const NoDesign& e) {
    err << e.what() << '\n' << e.report();
    return no_design;
  } catch (const InvalidArgument& e) {
    err << "invalid input: " << e.what() << '\n';
    return invalid_input;
  } catch (const IllConditioned& e) {
    err << "numerical failure: " << e.what() << '\n';
    return numerical_failure;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    return numerical_failure;
  }
  return invalid_input;
}

}  // namespace uvc::cli
