#pragma once

// Geometry of the certified region Omega = {sigma : V(sigma) <= 1}, with
// V(sigma) = sigma^T P sigma / ||sigma||, and of the validity region D_u of
// the dead-zone sector condition.

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "uvc/lmi_core.hpp"

namespace uvc {

/// sigma^T P sigma / ||sigma||; zero at the origin.
inline double lyapunov_value(const Matrix& P, const Vector& sigma) {
  const double norm = sigma.norm();
  if (norm == 0.0) return 0.0;
  return sigma.dot(P * sigma) / norm;
}

inline double lyapunov_value(const ControllerDesign& d, const Vector& sigma) {
  if (sigma.size() != d.P.rows()) throw InvalidArgument("state has wrong dimension");
  return lyapunov_value(d.P, sigma);
}

inline bool omega_contains(const ControllerDesign& d, const Vector& sigma) {
  return lyapunov_value(d, sigma) <= 1.0 + 1e-12;
}

/// Directional test |(K - L)_l sigma / ||sigma||| <= u_l for every row; true at the origin.
inline bool du_contains(const Matrix& K, const Matrix& L, const SaturationLimits& limits, const Vector& sigma) {
  if (K.rows() != limits.size() || L.rows() != K.rows() || L.cols() != K.cols() || sigma.size() != K.cols())
    throw InvalidArgument("du_contains: dimension mismatch");
  const double norm = sigma.norm();
  if (norm == 0.0) return true;
  const Vector v = (K - L) * (sigma / norm);
  for (int l = 0; l < limits.size(); ++l)
    if (std::abs(v(l)) > limits[l]) return false;
  return true;
}

inline bool du_contains(const ControllerDesign& d, const SaturationLimits& limits, const Vector& sigma) {
  return du_contains(d.K, d.L, limits, sigma);
}

inline bool du_contains(const ControllerDesign& d, const Vector& sigma) { return du_contains(d, d.u_bar, sigma); }

/// Polyhedral test |(K - L)_l z| <= u_l in z-coordinates.
inline bool du_contains_z(const Matrix& K, const Matrix& L, const SaturationLimits& limits, const Vector& z) {
  const Vector v = (K - L) * z;
  for (int l = 0; l < limits.size(); ++l)
    if (std::abs(v(l)) > limits[l]) return false;
  return true;
}

/// u_l^2 - (K - L)_l P^-1 (K - L)_l^T per actuator; all >= 0 certifies Omega in D_u.
inline Vector inclusion_margins(const Matrix& K, const Matrix& L, const Matrix& P, const SaturationLimits& limits,
                                double condition_cap = 1e12) {
  if (K.rows() != limits.size()) throw InvalidArgument("inclusion_margins: dimension mismatch");
  const Matrix Pinv = checked_inverse(P, condition_cap, "P");
  const Matrix D = K - L;
  Vector out(limits.size());
  for (int l = 0; l < limits.size(); ++l) out(l) = limits[l] * limits[l] - D.row(l).dot(Pinv * D.row(l).transpose());
  return out;
}

inline Vector inclusion_margins(const ControllerDesign& d, const SaturationLimits& limits) {
  return inclusion_margins(d.K, d.L, d.P, limits);
}

inline Vector inclusion_margins(const ControllerDesign& d) { return inclusion_margins(d, d.u_bar); }

inline double smallest_eigenvalue(const Matrix& m) { return min_eigenvalue(0.5 * (m + m.transpose())); }

inline double largest_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

inline double spectral_norm(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

/// V(sigma0) / lambda_min(Q).
inline double reaching_time_bound(const ControllerDesign& d, const Vector& sigma0) {
  if (sigma0.norm() == 0.0) throw InvalidArgument("reaching_time_bound needs a nonzero initial state");
  return lyapunov_value(d, sigma0) / smallest_eigenvalue(d.Q);
}

/// Certificate invariants of a recovered design.
struct CertificateCheck {
  double p_min_eigenvalue = 0.0;
  double q_min_eigenvalue = 0.0;
  double p_max_eigenvalue = 0.0;
  Vector margins;
  double tol = 0.0;

  bool p_positive() const { return p_min_eigenvalue > 0.0; }
  bool q_positive() const { return q_min_eigenvalue > 0.0; }
  bool decay_ok(double rho) const { return q_min_eigenvalue >= 1.0 / rho - tol; }
  bool inclusion_ok() const { return margins.size() == 0 || margins.minCoeff() >= -tol; }
  bool ok(double rho) const { return p_positive() && q_positive() && decay_ok(rho) && inclusion_ok(); }
};

inline CertificateCheck certify(const ControllerDesign& d, double tol) {
  CertificateCheck c;
  c.tol = tol;
  c.p_min_eigenvalue = smallest_eigenvalue(d.P);
  c.p_max_eigenvalue = largest_eigenvalue(d.P);
  c.q_min_eigenvalue = smallest_eigenvalue(d.Q);
  if (c.p_positive()) c.margins = inclusion_margins(d);
  return c;
}

/// Boundary of Omega (and D_u admissibility) along a set of unit directions.
struct RegionSample {
  std::vector<Vector> directions;
  std::vector<double> omega_radius;
  std::vector<bool> du_admissible;
  double du_plot_radius = 0.0;  ///< radius used to draw admissible D_u directions
};

inline RegionSample omega_boundary(const ControllerDesign& d, const std::vector<Vector>& directions,
                                   double du_radius_factor = 10.0) {
  RegionSample out;
  double max_radius = 0.0;
  for (const auto& dir : directions) {
    if (dir.size() != d.P.rows()) throw InvalidArgument("direction has wrong dimension");
    if (std::abs(dir.norm() - 1.0) > 1e-12) throw InvalidArgument("directions must be unit vectors");
    const double r = 1.0 / dir.dot(d.P * dir);
    out.directions.push_back(dir);
    out.omega_radius.push_back(r);
    out.du_admissible.push_back(du_contains(d, dir));
    max_radius = std::max(max_radius, r);
  }
  out.du_plot_radius = du_radius_factor * max_radius;
  return out;
}

/// Deterministic near-uniform unit directions: evenly spaced angles in 2-D, a
/// Fibonacci lattice in 3-D, +-1 in 1-D, normalized Gaussians (seeded) above.
inline std::vector<Vector> sample_directions(int n, int count, std::uint64_t seed = 0) {
  if (n < 1 || count < 1) throw InvalidArgument("sample_directions needs n >= 1 and count >= 1");
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(count));
  if (n == 1) {
    for (int k = 0; k < count; ++k) out.push_back(Vector::Constant(1, k % 2 == 0 ? 1.0 : -1.0));
  } else if (n == 2) {
    for (int k = 0; k < count; ++k) {
      const double a = 2.0 * std::numbers::pi * k / count;
      Vector v(2);
      v << std::cos(a), std::sin(a);
      out.push_back(v);
    }
  } else if (n == 3) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < count; ++k) {
      const double z = count == 1 ? 0.0 : 1.0 - 2.0 * (k + 0.5) / count;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      Vector v(3);
      v << r * std::cos(golden * k), r * std::sin(golden * k), z;
      out.push_back(v / v.norm());
    }
  } else {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    while (static_cast<int>(out.size()) < count) {
      Vector v(n);
      for (int i = 0; i < n; ++i) v(i) = g(rng);
      const double norm = v.norm();
      if (norm > 1e-12) out.push_back(v / norm);
    }
  }
  return out;
}

/// Points on the boundary of Omega along the given directions.
inline std::vector<Vector> omega_boundary_points(const ControllerDesign& d, const std::vector<Vector>& directions) {
  const RegionSample s = omega_boundary(d, directions);
  std::vector<Vector> out;
  for (std::size_t k = 0; k < s.directions.size(); ++k) out.push_back(s.omega_radius[k] * s.directions[k]);
  return out;
}

/// psi(u)^T U (psi(u) - L z) with u = K z; non-positive whenever z is in D_u.
inline double sector_condition(const Matrix& K, const Matrix& L, const Matrix& U, const SaturationLimits& limits,
                               const Vector& z) {
  if (K.rows() != limits.size() || U.rows() != K.rows() || U.cols() != K.rows() || z.size() != K.cols())
    throw InvalidArgument("sector_condition: dimension mismatch");
  for (int i = 0; i < U.rows(); ++i)
    for (int j = 0; j < U.cols(); ++j)
      if ((i == j && !(U(i, j) > 0.0)) || (i != j && U(i, j) != 0.0))
        throw InvalidArgument("sector_condition: U must be diagonal positive");
  const Vector u = K * z;
  Vector psi(u.size());
  for (int l = 0; l < u.size(); ++l) psi(l) = u(l) - std::clamp(u(l), -limits[l], limits[l]);
  return psi.dot(U * (psi - L * z));
}

/// sigma sigma^T / ||sigma||^2
inline Matrix projection(const Vector& sigma) {
  const double n2 = sigma.squaredNorm();
  if (n2 == 0.0) throw InvalidArgument("projection of the zero vector");
  return sigma * sigma.transpose() / n2;
}

/// (1/mu) K^T B^T B K + (mu/4) P^2 + 1/2 K^T B^T Pi P + 1/2 P Pi B K; PSD by completing the square.
inline Matrix completion_of_squares(const Matrix& K, const Matrix& B, const Matrix& P, const Vector& sigma, double mu) {
  const Matrix BK = B * K;
  const Matrix Pi = projection(sigma);
  const Matrix cross = 0.5 * BK.transpose() * Pi * P;
  return BK.transpose() * BK / mu + 0.25 * mu * P * P + cross + cross.transpose();
}

}  // namespace uvc
