#pragma once

// Closed loop sigma' = B sat(K sigma / ||sigma||) integrated with classical RK4.
//
// The vector field is smooth except at the origin. Steps keep the fixed size h
// until one full step could travel more than half the current distance to the
// origin; from there the step shrinks to that half-distance travel time, so
// the discontinuity is approached but never stepped across. Integration stops
// at the first step ending inside the ball ||sigma|| <= delta_stop.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "uvc/analysis.hpp"
#include "uvc/parallel.hpp"

namespace uvc {

inline Vector saturate(const Vector& u, const SaturationLimits& limits) {
  if (u.size() != limits.size()) throw InvalidArgument("saturate: dimension mismatch");
  Vector out(u.size());
  for (int l = 0; l < limits.size(); ++l) out(l) = std::clamp(u(l), -limits[l], limits[l]);
  return out;
}

/// psi(u) = u - sat(u)
inline Vector dead_zone(const Vector& u, const SaturationLimits& limits) { return u - saturate(u, limits); }

inline Matrix blend_vertices(const PolytopicSystem& system, const SimplexWeights& weights) {
  if (weights.size() != system.vertex_count()) throw InvalidArgument("weight count differs from vertex count");
  Matrix B = Matrix::Zero(system.states(), system.inputs());
  for (int i = 0; i < system.vertex_count(); ++i) B += weights.values()(i) * system.vertex(i);
  return B;
}

/// Uniform samples on the simplex: normalized standard-exponential variates.
/// Sample k draws from its own stream seeded by (seed, k).
inline std::vector<SimplexWeights> sample_simplex(int vertices, int count, std::uint64_t seed) {
  if (vertices < 1 || count < 0) throw InvalidArgument("sample_simplex: bad sizes");
  std::vector<SimplexWeights> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(k)};
    std::mt19937_64 rng(seq);
    std::exponential_distribution<double> expo(1.0);
    Vector raw(vertices);
    for (int i = 0; i < vertices; ++i) raw(i) = expo(rng);
    out.push_back(SimplexWeights::normalized(raw));
  }
  return out;
}

struct IntegratorSettings {
  double step = 1e-4;
  double t_max = 10.0;
  double delta_stop = 1e-5;
  int record_stride = 1;

  void validate() const {
    if (!(step > 0.0)) throw InvalidArgument("integrator step must be positive");
    if (!(t_max > step)) throw InvalidArgument("t_max must exceed the step");
    if (!(delta_stop > 0.0)) throw InvalidArgument("delta_stop must be positive");
    if (record_stride < 1) throw InvalidArgument("record_stride must be at least 1");
  }
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<Vector> inputs;      ///< u = K sigma / ||sigma||
  std::vector<Vector> sat_inputs;  ///< sat(u)
  std::vector<double> lyapunov;    ///< V(sigma); empty when no P was given
  std::optional<double> reach_time;

  std::size_t size() const { return times.size(); }
};

namespace detail {

inline Vector uvc_input(const Matrix& K, const Vector& sigma) {
  const double norm = sigma.stableNorm();
  if (norm == 0.0) return Vector::Zero(K.rows());
  return K * (sigma / norm);
}

}  // namespace detail

inline Trajectory simulate(const Matrix& B, const Matrix& K, const SaturationLimits& limits, const Vector& sigma0,
                           const IntegratorSettings& settings, const std::optional<Matrix>& P = std::nullopt) {
  settings.validate();
  const auto n = B.rows();
  if (K.cols() != n || K.rows() != B.cols() || limits.size() != B.cols() || sigma0.size() != n)
    throw InvalidArgument("simulate: dimension mismatch");
  if (P && (P->rows() != n || P->cols() != n)) throw InvalidArgument("simulate: P has wrong shape");
  if (sigma0.norm() == 0.0) throw InvalidArgument("simulate: initial state must be nonzero");
  if (!sigma0.allFinite()) throw InvalidArgument("simulate: initial state must be finite");

  auto field = [&](const Vector& s) -> Vector { return B * saturate(detail::uvc_input(K, s), limits); };

  Trajectory traj;
  auto record = [&](double t, const Vector& s) {
    const Vector u = detail::uvc_input(K, s);
    traj.times.push_back(t);
    traj.states.push_back(s);
    traj.inputs.push_back(u);
    traj.sat_inputs.push_back(saturate(u, limits));
    if (P) traj.lyapunov.push_back(lyapunov_value(*P, s));
  };

  Vector sigma = sigma0;
  double t = 0.0;
  record(t, sigma);
  if (sigma.stableNorm() <= settings.delta_stop) {
    traj.reach_time = 0.0;
    return traj;
  }

  const double h = settings.step;
  const long max_steps = static_cast<long>(std::ceil(settings.t_max / h)) * 4 + 10000;
  long step_index = 0;
  while (t < settings.t_max - 1e-12 * settings.t_max && step_index < max_steps) {
    const double r = sigma.stableNorm();
    const Vector k1 = field(sigma);
    const double speed = k1.stableNorm();
    double dt = std::min(h, settings.t_max - t);
    if (speed * dt > 0.5 * r) dt = 0.5 * r / speed;

    const Vector k2 = field(sigma + 0.5 * dt * k1);
    const Vector k3 = field(sigma + 0.5 * dt * k2);
    const Vector k4 = field(sigma + dt * k3);
    const Vector next = sigma + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!next.allFinite()) throw NumericalFailure("simulate: non-finite state");

    const double r_next = next.stableNorm();
    const double t_next = t + dt;
    ++step_index;
    const bool reached = r_next <= settings.delta_stop;
    if (reached || step_index % settings.record_stride == 0 || t_next >= settings.t_max * (1.0 - 1e-12))
      record(t_next, next);
    if (reached) {
      const double frac = r > r_next ? (r - settings.delta_stop) / (r - r_next) : 1.0;
      traj.reach_time = t + std::clamp(frac, 0.0, 1.0) * dt;
      return traj;
    }
    sigma = next;
    t = t_next;
  }
  if (traj.times.back() < t) record(t, sigma);
  return traj;
}

/// Longest time channel l spends with |u_l| > u_bar_l, measured over recorded samples
/// (each saturated sample contributes the interval to the next sample).
inline double longest_saturation(const Trajectory& traj, const SaturationLimits& limits, int channel) {
  double best = 0.0, run = 0.0;
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    if (std::abs(traj.inputs[k](channel)) > limits[channel]) {
      run += traj.times[k + 1] - traj.times[k];
      best = std::max(best, run);
    } else {
      run = 0.0;
    }
  }
  return best;
}

/// Count of recorded steps where V rises by more than tol while ||sigma|| > delta_stop.
inline int lyapunov_increases(const Trajectory& traj, double delta_stop, double tol = 1e-6) {
  int count = 0;
  for (std::size_t k = 0; k + 1 < traj.lyapunov.size(); ++k)
    if (traj.states[k].norm() > delta_stop && traj.lyapunov[k + 1] > traj.lyapunov[k] + tol) ++count;
  return count;
}

struct BatchCase {
  std::size_t point = 0;
  std::size_t weight = 0;
  std::optional<double> reach_time;
  double bound = 0.0;           ///< V(sigma0) / lambda_min(Q)
  int lyapunov_violations = 0;
  Vector saturated_time;        ///< seconds each channel spent saturated
  double duration = 0.0;
  std::string error;
};

struct BatchReport {
  std::vector<BatchCase> cases;
  double max_reach_time = 0.0;
  int lyapunov_violations = 0;
  int unreached = 0;
  int failures = 0;
  Vector duty_cycle;  ///< per actuator, saturated time over total simulated time

  /// Cases whose reach time exceeds bound * (1 + slack) (unreached cases count too).
  int bound_exceedances(double slack) const {
    int count = 0;
    for (const auto& c : cases)
      if (c.error.empty() && (!c.reach_time || *c.reach_time > c.bound * (1.0 + slack))) ++count;
    return count;
  }
};

inline BatchReport batch_verify(const ControllerDesign& design, const PolytopicSystem& system,
                                const std::vector<Vector>& initial_points,
                                const std::vector<SimplexWeights>& weight_samples, const IntegratorSettings& settings) {
  settings.validate();
  const std::size_t total = initial_points.size() * weight_samples.size();
  const int m = design.inputs();
  std::vector<BatchCase> cases(total);

  parallel_for(total, [&](std::size_t idx) {
    BatchCase& c = cases[idx];
    c.point = idx / weight_samples.size();
    c.weight = idx % weight_samples.size();
    c.saturated_time = Vector::Zero(m);
    try {
      const Vector& s0 = initial_points[c.point];
      c.bound = reaching_time_bound(design, s0);
      const Matrix B = blend_vertices(system, weight_samples[c.weight]);
      const Trajectory tr = simulate(B, design.K, design.u_bar, s0, settings, design.P);
      c.reach_time = tr.reach_time;
      c.lyapunov_violations = lyapunov_increases(tr, settings.delta_stop);
      c.duration = tr.times.back();
      for (std::size_t k = 0; k + 1 < tr.size(); ++k)
        for (int l = 0; l < m; ++l)
          if (std::abs(tr.inputs[k](l)) > design.u_bar[l]) c.saturated_time(l) += tr.times[k + 1] - tr.times[k];
    } catch (const std::exception& e) {
      c.error = e.what();
    }
  });

  BatchReport report;
  report.duty_cycle = Vector::Zero(m);
  double total_time = 0.0;
  for (auto& c : cases) {
    if (!c.error.empty()) {
      ++report.failures;
      continue;
    }
    if (c.reach_time)
      report.max_reach_time = std::max(report.max_reach_time, *c.reach_time);
    else
      ++report.unreached;
    report.lyapunov_violations += c.lyapunov_violations;
    report.duty_cycle += c.saturated_time;
    total_time += c.duration;
  }
  if (total_time > 0.0) report.duty_cycle /= total_time;
  report.cases = std::move(cases);
  return report;
}

}  // namespace uvc
