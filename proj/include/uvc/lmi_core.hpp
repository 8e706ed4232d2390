#pragma once

// Block LMIs for saturated unit vector control design.
//
// Decision variables (in this order): X (n x n symmetric), S (m x m diagonal),
// Z, Y (m x n full), Qtilde (n x n symmetric), phi (scalar). The program is
//
//   min phi  s.t.  X >= eps I,  S >= eps I,  -Lambda_i >= eps I   (each vertex)
//                  [X, (Z_l - Y_l)^T; Z_l - Y_l, u_l^2] >= 0      (each actuator)
//                  [Qtilde, X; X, rho I] >= 0
//                  [phi I, I; I, X] >= 0
//
// with
//   Lambda_i = [ B_i Z + Z^T B_i^T + mu/4 I + Qtilde,  Y^T - B_i S,  Z^T B_i^T ]
//              [ Y - S B_i^T,                         -2 S,         0         ]
//              [ B_i Z,                                0,           -mu I      ]
//
// The gains follow as K = Z X^-1, L = Y X^-1, P = X^-1, Q = P Qtilde P.

#include <optional>
#include <string>
#include <vector>

#include "uvc/lmi_program.hpp"
#include "uvc/sdp.hpp"
#include "uvc/types.hpp"

namespace uvc {

struct IndexRange {
  int offset = 0;
  int count = 0;
  bool contains(int k) const { return k >= offset && k < offset + count; }
};

/// Canonical mapping of scalar decision variables to the matrix unknowns.
class DecisionLayout {
 public:
  DecisionLayout(int n, int m) : n_(n), m_(m) {
    if (n < 1 || m < 1) throw InvalidArgument("decision layout needs n >= 1 and m >= 1");
    const int sym_n = n * (n + 1) / 2;
    int at = 0;
    auto take = [&at](int count) {
      IndexRange r{at, count};
      at += count;
      return r;
    };
    X = take(sym_n);
    S = take(m);
    Z = take(m * n);
    Y = take(m * n);
    Qtilde = take(sym_n);
    phi = take(1);
    total_vars_ = at;
  }

  int states() const { return n_; }
  int inputs() const { return m_; }
  int total_vars() const { return total_vars_; }

  IndexRange X, S, Z, Y, Qtilde, phi;

  AffineMatrix x_expr() const { return symmetric_expr(X); }
  AffineMatrix qtilde_expr() const { return symmetric_expr(Qtilde); }
  AffineMatrix z_expr() const { return full_expr(Z); }
  AffineMatrix y_expr() const { return full_expr(Y); }

  AffineMatrix s_expr() const {
    AffineMatrix out(m_, m_);
    for (int i = 0; i < m_; ++i) {
      Matrix e = Matrix::Zero(m_, m_);
      e(i, i) = 1.0;
      out += AffineMatrix::variable(m_, m_, S.offset + i, std::move(e));
    }
    return out;
  }

  /// phi * I_size
  AffineMatrix phi_identity(int size) const {
    return AffineMatrix::variable(size, size, phi.offset, Matrix::Identity(size, size));
  }

  Matrix x_value(const Vector& x) const { return symmetric_value(X, x); }
  Matrix qtilde_value(const Vector& x) const { return symmetric_value(Qtilde, x); }
  Matrix z_value(const Vector& x) const { return full_value(Z, x); }
  Matrix y_value(const Vector& x) const { return full_value(Y, x); }
  Vector s_value(const Vector& x) const { return x.segment(S.offset, m_); }
  double phi_value(const Vector& x) const { return x(phi.offset); }

  /// Inverse of the *_value maps; used to re-evaluate a stored design.
  Vector pack(const Matrix& Xm, const Vector& Sd, const Matrix& Zm, const Matrix& Ym, const Matrix& Qt,
              double phi_v) const {
    Vector x = Vector::Zero(total_vars_);
    int k = X.offset;
    for (int i = 0; i < n_; ++i)
      for (int j = i; j < n_; ++j) x(k++) = 0.5 * (Xm(i, j) + Xm(j, i));
    x.segment(S.offset, m_) = Sd;
    k = Z.offset;
    for (int r = 0; r < m_; ++r)
      for (int c = 0; c < n_; ++c) x(k++) = Zm(r, c);
    k = Y.offset;
    for (int r = 0; r < m_; ++r)
      for (int c = 0; c < n_; ++c) x(k++) = Ym(r, c);
    k = Qtilde.offset;
    for (int i = 0; i < n_; ++i)
      for (int j = i; j < n_; ++j) x(k++) = 0.5 * (Qt(i, j) + Qt(j, i));
    x(phi.offset) = phi_v;
    return x;
  }

 private:
  AffineMatrix symmetric_expr(IndexRange r) const {
    AffineMatrix out(n_, n_);
    int k = r.offset;
    for (int i = 0; i < n_; ++i)
      for (int j = i; j < n_; ++j) {
        Matrix e = Matrix::Zero(n_, n_);
        e(i, j) = 1.0;
        e(j, i) = 1.0;
        out += AffineMatrix::variable(n_, n_, k++, std::move(e));
      }
    return out;
  }

  AffineMatrix full_expr(IndexRange r) const {
    AffineMatrix out(m_, n_);
    int k = r.offset;
    for (int row = 0; row < m_; ++row)
      for (int col = 0; col < n_; ++col) {
        Matrix e = Matrix::Zero(m_, n_);
        e(row, col) = 1.0;
        out += AffineMatrix::variable(m_, n_, k++, std::move(e));
      }
    return out;
  }

  Matrix symmetric_value(IndexRange r, const Vector& x) const {
    Matrix out(n_, n_);
    int k = r.offset;
    for (int i = 0; i < n_; ++i)
      for (int j = i; j < n_; ++j) {
        out(i, j) = x(k);
        out(j, i) = x(k);
        ++k;
      }
    return out;
  }

  Matrix full_value(IndexRange r, const Vector& x) const {
    Matrix out(m_, n_);
    int k = r.offset;
    for (int row = 0; row < m_; ++row)
      for (int col = 0; col < n_; ++col) out(row, col) = x(k++);
    return out;
  }

  int n_ = 0;
  int m_ = 0;
  int total_vars_ = 0;
};

struct SynthesisParameters {
  double mu = 1.0;
  double rho = 1.0;
  /// Margin for strict inequalities. Unset: 1e-6 * max(1, max_i ||B_i||_2).
  std::optional<double> eps_strict;
  double condition_cap = 1e12;
  SolverSettings solver;

  double strict_margin(const PolytopicSystem& sys) const {
    if (eps_strict) return *eps_strict;
    return 1e-6 * std::max(1.0, sys.max_vertex_norm());
  }

  void validate() const {
    if (!(mu > 0.0) || !std::isfinite(mu)) throw InvalidArgument("mu must be positive");
    if (!(rho > 0.0) || !std::isfinite(rho)) throw InvalidArgument("rho must be positive");
    if (eps_strict && !(*eps_strict > 0.0)) throw InvalidArgument("eps_strict must be positive");
    if (!(condition_cap > 1.0)) throw InvalidArgument("condition cap must exceed one");
    solver.validate();
  }
};

namespace labels {
inline std::string lambda_vertex(int i) { return "Lambda_vertex_" + std::to_string(i + 1); }
inline std::string inclusion_row(int l) { return "inclusion_row_" + std::to_string(l + 1); }
inline constexpr const char* x_pos = "Xpos";
inline constexpr const char* s_pos = "Spos";
inline constexpr const char* q_max = "Qmax";
inline constexpr const char* u0_max = "U0max";
}  // namespace labels

inline void check_dimensions(const PolytopicSystem& system, const SaturationLimits& limits,
                             const DecisionLayout& layout) {
  if (system.states() != layout.states() || system.inputs() != layout.inputs())
    throw InvalidArgument("system and decision layout dimensions differ");
  if (limits.size() != system.inputs()) throw InvalidArgument("saturation limits length differs from input count");
}

/// Lambda_i for vertex matrix B (before sign normalization).
inline AffineMatrix lambda_block(const DecisionLayout& layout, const Matrix& B, double mu) {
  const int n = layout.states();
  const int m = layout.inputs();
  const AffineMatrix Z = layout.z_expr();
  const AffineMatrix Y = layout.y_expr();
  const AffineMatrix S = layout.s_expr();
  const AffineMatrix BZ = B * Z;
  const AffineMatrix BS = B * S;
  const Matrix I_n = Matrix::Identity(n, n);

  AffineMatrix top_left = BZ + BZ.transpose() + layout.qtilde_expr() + Matrix(0.25 * mu * I_n);
  return AffineMatrix::blocks({
      {top_left, Y.transpose() - BS, BZ.transpose()},
      {Y - BS.transpose(), -2.0 * S, AffineMatrix(m, n)},
      {BZ, AffineMatrix(n, m), AffineMatrix(Matrix(-mu * I_n))},
  });
}

inline LmiProgram assemble_program(const PolytopicSystem& system, const SaturationLimits& limits,
                                   const SynthesisParameters& params, const DecisionLayout& layout) {
  check_dimensions(system, limits, layout);
  params.validate();
  const int n = layout.states();
  const int m = layout.inputs();
  const double eps = params.strict_margin(system);

  LmiProgram prog;
  prog.num_vars = layout.total_vars();
  prog.objective = Vector::Zero(prog.num_vars);
  prog.objective(layout.phi.offset) = 1.0;

  const AffineMatrix X = layout.x_expr();
  prog.blocks.push_back(LmiBlock::from_affine(labels::x_pos, X - Matrix(eps * Matrix::Identity(n, n))));
  prog.blocks.push_back(
      LmiBlock::from_affine(labels::s_pos, layout.s_expr() - Matrix(eps * Matrix::Identity(m, m))));

  const int size = 2 * n + m;
  for (int i = 0; i < system.vertex_count(); ++i) {
    AffineMatrix neg = -lambda_block(layout, system.vertex(i), params.mu);
    prog.blocks.push_back(
        LmiBlock::from_affine(labels::lambda_vertex(i), neg - Matrix(eps * Matrix::Identity(size, size))));
  }

  const AffineMatrix ZmY = layout.z_expr() - layout.y_expr();
  for (int l = 0; l < m; ++l) {
    Matrix sel = Matrix::Zero(1, m);
    sel(0, l) = 1.0;
    const AffineMatrix row = sel * ZmY;
    Matrix ubar2(1, 1);
    ubar2(0, 0) = limits[l] * limits[l];
    prog.blocks.push_back(LmiBlock::from_affine(labels::inclusion_row(l),
                                                AffineMatrix::blocks({{X, row.transpose()}, {row, AffineMatrix(ubar2)}})));
  }

  const Matrix I_n = Matrix::Identity(n, n);
  prog.blocks.push_back(LmiBlock::from_affine(
      labels::q_max, AffineMatrix::blocks({{layout.qtilde_expr(), X}, {X, AffineMatrix(Matrix(params.rho * I_n))}})));
  prog.blocks.push_back(LmiBlock::from_affine(
      labels::u0_max, AffineMatrix::blocks({{layout.phi_identity(n), AffineMatrix(I_n)}, {AffineMatrix(I_n), X}})));
  return prog;
}

/// Gains and certificate recovered from a solved program.
struct ControllerDesign {
  Matrix K;  ///< m x n control gain
  Matrix L;  ///< m x n auxiliary gain of the sector condition
  Matrix P;  ///< Lyapunov matrix
  Matrix Q;  ///< decay matrix
  Vector S;  ///< diagonal sector multiplier (U = S^-1)
  double phi = 0.0;
  double mu = 0.0;
  double rho = 0.0;
  double eps_strict = 0.0;
  SaturationLimits u_bar;
  PolytopicSystem system;
  ResidualReport residuals;
  int solver_iterations = 0;
  Vector decision;  ///< solver point the design was recovered from

  int states() const { return static_cast<int>(K.cols()); }
  int inputs() const { return static_cast<int>(K.rows()); }
};

/// X >= 0 inverse with a condition check. Returns the symmetrized inverse.
inline Matrix checked_inverse(const Matrix& A, double cap, const char* what) {
  const Matrix s = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  const double lmin = es.eigenvalues().minCoeff();
  const double lmax = es.eigenvalues().maxCoeff();
  if (!(lmin > 0.0) || !(lmax / lmin <= cap))
    throw IllConditioned(std::string(what) + " is singular or ill-conditioned (cond > " + std::to_string(cap) + ")");
  const Matrix inv = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (inv + inv.transpose());
}

inline ControllerDesign recover_design(const SdpSolution& solution, const DecisionLayout& layout,
                                       const PolytopicSystem& system, const SaturationLimits& limits,
                                       const SynthesisParameters& params) {
  check_dimensions(system, limits, layout);
  if (!solution.ok())
    throw NoDesign(std::string("solver returned status '") + to_string(solution.status) + "'", solution.certificate);
  if (solution.x.size() != layout.total_vars()) throw InvalidArgument("solution length differs from layout");

  const Vector& x = solution.x;
  const Matrix Xs = layout.x_value(x);
  const Matrix P = checked_inverse(Xs, params.condition_cap, "X");
  const Matrix Qt = layout.qtilde_value(x);
  Matrix Q = P * Qt * P;
  Q = 0.5 * (Q + Q.transpose());

  return ControllerDesign{
      layout.z_value(x) * P,
      layout.y_value(x) * P,
      P,
      Q,
      layout.s_value(x),
      layout.phi_value(x),
      params.mu,
      params.rho,
      params.strict_margin(system),
      limits,
      system,
      ResidualReport{},
      solution.iterations,
      solution.x,
  };
}

/// Rebuilds the decision vector implied by a design (X = P^-1, Z = K X, ...).
inline Vector design_point(const ControllerDesign& d, const DecisionLayout& layout) {
  const Matrix X = checked_inverse(d.P, 1e300, "P");
  return layout.pack(X, d.S, d.K * X, d.L * X, X * d.Q * X, d.phi);
}

}  // namespace uvc
