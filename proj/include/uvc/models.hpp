#pragma once

// Polytopic input maps of the two reference plants: a planar manipulator seen
// through an uncalibrated camera, and a four-thruster underwater vehicle.

#include <cmath>
#include <numbers>
#include <vector>

#include "uvc/types.hpp"

namespace uvc::models {

/// [[c, s], [-s, c]]
inline Matrix rotation(double c, double s) {
  Matrix r(2, 2);
  r << c, s, -s, c;
  return r;
}

/// Vertices R(c_i, s_i) * R(phi_bar) for the camera-angle uncertainty |dphi| <= delta_bar, in the
/// order (cos, sin), (1, sin), (cos, -sin), (1, -sin) of delta_bar.
inline PolytopicSystem manipulator_polytope(double phi_bar, double delta_bar) {
  if (!(delta_bar >= 0.0 && delta_bar <= std::numbers::pi / 2) || !std::isfinite(phi_bar))
    throw InvalidArgument("manipulator model needs 0 <= delta_bar <= pi/2");
  const Matrix nominal = rotation(std::cos(phi_bar), std::sin(phi_bar));
  const double c = std::cos(delta_bar);
  const double s = std::sin(delta_bar);
  return PolytopicSystem({
      rotation(c, s) * nominal,
      rotation(1.0, s) * nominal,
      rotation(c, -s) * nominal,
      rotation(1.0, -s) * nominal,
  });
}

struct RovParameters {
  double mass = 290.0;     // kg
  double inertia = 290.0;  // kg m^2
  double psi1 = std::numbers::sqrt2 / 2.0;
  double psi2 = 0.35;      // m
  double gain_lo = 0.5;
  double gain_hi = 1.0;
};

/// B(g) = M^-1 Psi diag(g1, 1, g3, 1) at (g1, g3) in {lo, hi}^2, lexicographic.
inline PolytopicSystem rov_polytope(const RovParameters& p = {}) {
  if (!(p.mass > 0.0) || !(p.inertia > 0.0)) throw InvalidArgument("ROV mass and inertia must be positive");
  if (!(p.gain_lo > 0.0) || !(p.gain_lo <= p.gain_hi)) throw InvalidArgument("ROV gains need 0 < lo <= hi");
  Matrix psi(3, 4);
  psi << p.psi1, p.psi1, p.psi1, p.psi1,
         p.psi1, -p.psi1, -p.psi1, p.psi1,
         -p.psi2, p.psi2, -p.psi2, p.psi2;
  const Eigen::Vector3d m_inv(1.0 / p.mass, 1.0 / p.mass, 1.0 / p.inertia);
  const Matrix base = m_inv.asDiagonal() * psi;

  std::vector<Matrix> vertices;
  for (double g1 : {p.gain_lo, p.gain_hi})
    for (double g3 : {p.gain_lo, p.gain_hi}) {
      const Eigen::Vector4d pi(g1, 1.0, g3, 1.0);
      vertices.push_back(base * pi.asDiagonal());
    }
  return PolytopicSystem(std::move(vertices));
}

/// Reference gain for the manipulator example (mu = 3, rho = 1).
inline Matrix manipulator_reference_gain() {
  Matrix k(2, 2);
  k << -1.9368, 1.1182, -1.1182, -1.9368;
  return k;
}

/// Reference gain for the ROV example (mu = 0.4, rho = 10).
inline Matrix rov_reference_gain() {
  Matrix k(4, 3);
  k << -30.9190, -5.7321, 5.9126,
       -20.2414, 23.8253, -0.3787,
       -31.0926, 0.9531, 4.8242,
       -22.5835, -26.6822, -14.9989;
  return k;
}

}  // namespace uvc::models
