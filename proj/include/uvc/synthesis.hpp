#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "uvc/analysis.hpp"
#include "uvc/lmi_core.hpp"
#include "uvc/parallel.hpp"
#include "uvc/sdp.hpp"

namespace uvc {

/// Assemble, solve, recover and certify one design.
inline ControllerDesign synthesize(const PolytopicSystem& system, const SaturationLimits& limits,
                                   const SynthesisParameters& params) {
  params.validate();
  const DecisionLayout layout(system.states(), system.inputs());
  const LmiProgram program = assemble_program(system, limits, params, layout);
  const SdpSolution sol = solve_sdp(program, params.solver);
  const ResidualReport report = residuals(program, sol.x);

  if (!sol.ok()) {
    std::ostringstream os;
    os << "status: " << to_string(sol.status) << " after " << sol.iterations << " iterations\n";
    if (!sol.certificate.empty()) os << "  " << sol.certificate << '\n';
    os << report.to_string();
    throw NoDesign(std::string("no design: solver status is ") + to_string(sol.status), os.str());
  }

  ControllerDesign design = recover_design(sol, layout, system, limits, params);
  design.residuals = report;

  // Schur chains lose at most tol * ||P||^2 against the block residuals.
  const double p_max = largest_eigenvalue(design.P);
  const CertificateCheck check = certify(design, params.solver.tol * std::max(1.0, p_max * p_max) * 10.0);
  if (!check.ok(params.rho)) {
    std::ostringstream os;
    os << "recovered design fails its certificate: lambda_min(P) = " << check.p_min_eigenvalue
       << ", lambda_min(Q) = " << check.q_min_eigenvalue << '\n'
       << report.to_string();
    throw NoDesign("recovered design fails its certificate", os.str());
  }
  return design;
}

/// Log-spaced mu values.
inline std::vector<double> log_grid(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi >= lo) || count < 1) throw InvalidArgument("log grid needs 0 < lo <= hi and count >= 1");
  std::vector<double> out;
  for (int k = 0; k < count; ++k) {
    const double f = count == 1 ? 0.0 : static_cast<double>(k) / (count - 1);
    out.push_back(lo * std::pow(hi / lo, f));
  }
  return out;
}

inline std::vector<double> default_mu_grid() { return log_grid(1e-2, 1e2, 16); }

struct GridPoint {
  double mu = 0.0;
  std::string status;
  std::optional<double> phi;
  std::string message;
};

struct GridSearchResult {
  ControllerDesign design;
  std::size_t best_index = 0;
  std::vector<GridPoint> report;
};

inline std::string format_grid_report(const std::vector<GridPoint>& report) {
  std::ostringstream os;
  os.precision(6);
  for (const auto& g : report) {
    os << "  mu = " << g.mu << ": " << g.status;
    if (g.phi) os << ", phi = " << *g.phi;
    if (!g.message.empty()) os << " (" << g.message << ")";
    os << '\n';
  }
  return os.str();
}

/// One independent synthesis per mu; keeps the feasible design with the
/// smallest phi, earlier (smaller-index) grid points winning ties within 10 tol.
inline GridSearchResult mu_grid_search(const PolytopicSystem& system, const SaturationLimits& limits, double rho,
                                       const std::vector<double>& mu_grid, const SynthesisParameters& base = {}) {
  if (mu_grid.empty()) throw InvalidArgument("mu grid is empty");
  for (double mu : mu_grid)
    if (!(mu > 0.0)) throw InvalidArgument("mu grid values must be positive");

  std::vector<std::optional<ControllerDesign>> designs(mu_grid.size());
  std::vector<GridPoint> report(mu_grid.size());
  parallel_for(mu_grid.size(), [&](std::size_t k) {
    SynthesisParameters p = base;
    p.mu = mu_grid[k];
    p.rho = rho;
    report[k].mu = p.mu;
    try {
      designs[k] = synthesize(system, limits, p);
      report[k].status = "feasible";
      report[k].phi = designs[k]->phi;
    } catch (const NoDesign& e) {
      report[k].status = "no-design";
      report[k].message = e.what();
    } catch (const IllConditioned& e) {
      report[k].status = "ill-conditioned";
      report[k].message = e.what();
    }
  });

  std::optional<std::size_t> best;
  const double tie = 10.0 * base.solver.tol;
  for (std::size_t k = 0; k < mu_grid.size(); ++k) {
    if (!designs[k]) continue;
    if (!best) {
      best = k;
      continue;
    }
    const double a = designs[k]->phi, b = designs[*best]->phi;
    const bool better = a < b - tie * std::max(1.0, std::abs(b));
    const bool tied = !better && std::abs(a - b) <= tie * std::max(1.0, std::abs(b));
    if (better || (tied && mu_grid[k] < mu_grid[*best])) best = k;
  }
  if (!best) throw NoDesign("no mu in the grid gives a feasible design", format_grid_report(report));
  return GridSearchResult{std::move(*designs[*best]), *best, std::move(report)};
}

}  // namespace uvc
