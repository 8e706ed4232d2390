#pragma once

// Dense primal-dual interior-point solver for small block LMI programs.
//
// The LMI program
//     minimize c^T x   s.t.  F_j(x) = F_j0 + sum_k x_k F_jk >= 0,  j = 1..J
// is treated as the dual of the standard-form SDP
//     maximize -sum_j F_j0 . X_j   s.t.  sum_j F_jk . X_j = c_k,  X_j >= 0.
// Iterates (X, x, S) start infeasible and follow the central path with the
// HKM search direction and a Mehrotra predictor-corrector step. Blocks are
// scaled to unit Frobenius norm and the iteration runs in extended precision
// by default; the returned point is checked against the unscaled program in
// double precision.

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "uvc/lmi_program.hpp"

namespace uvc {

enum class SdpStatus { optimal, feasible, infeasible, max_iterations, numerical_failure };

inline const char* to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::optimal: return "optimal";
    case SdpStatus::feasible: return "feasible";
    case SdpStatus::infeasible: return "infeasible";
    case SdpStatus::max_iterations: return "max_iterations";
    case SdpStatus::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

struct SolverSettings {
  double tol = 1e-8;                 ///< residual, infeasibility and relative gap tolerance
  int max_iterations = 200;
  double step_fraction = 0.95;       ///< fraction of the step to the cone boundary
  double infeasibility_trace = 1e8;  ///< trace(X) above which a Farkas ray is tested
  bool extended_precision = true;    ///< iterate in long double
  bool deterministic = true;         ///< the bundled backend is sequential, so always deterministic
  bool verbose = false;              ///< per-iteration trace on stderr

  void validate() const {
    if (!(tol > 0.0)) throw InvalidArgument("solver tol must be positive");
    if (max_iterations < 1) throw InvalidArgument("solver max_iterations must be at least 1");
    if (!(step_fraction > 0.0 && step_fraction < 1.0)) throw InvalidArgument("step_fraction must lie in (0, 1)");
    if (!(infeasibility_trace > 1.0)) throw InvalidArgument("infeasibility_trace must exceed one");
  }
};

struct BlockResidual {
  std::string label;
  double min_eigenvalue = 0.0;
};

/// Smallest eigenvalue of every block at a point; max_violation = max(0, -min).
struct ResidualReport {
  std::vector<BlockResidual> blocks;
  double max_violation = 0.0;

  std::string to_string() const {
    std::ostringstream os;
    os.precision(6);
    os << std::scientific;
    for (const auto& b : blocks) os << "  " << b.label << ": lambda_min = " << b.min_eigenvalue << '\n';
    os << "  max violation = " << max_violation << '\n';
    return os.str();
  }
};

struct SdpSolution {
  SdpStatus status = SdpStatus::numerical_failure;
  Vector x;
  double objective_value = 0.0;
  int iterations = 0;
  double max_residual = 0.0;
  double primal_infeasibility = 0.0;  ///< relative, equality side
  double dual_infeasibility = 0.0;    ///< relative, LMI side
  double relative_gap = 0.0;
  std::string certificate;  ///< infeasibility or failure report

  bool ok() const { return status == SdpStatus::optimal || status == SdpStatus::feasible; }
};

template <class Derived>
typename Derived::Scalar min_eigenvalue(const Eigen::MatrixBase<Derived>& sym) {
  using Mat = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (sym.rows() == 1) return sym(0, 0);
  Eigen::SelfAdjointEigenSolver<Mat> es(Mat(sym), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

inline ResidualReport residuals(const LmiProgram& program, const Vector& x) {
  if (x.size() != program.num_vars) throw InvalidArgument("residuals: point has wrong dimension");
  ResidualReport report;
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& b : program.blocks) {
    const double lmin = min_eigenvalue(b.evaluate(x));
    report.blocks.push_back({b.label, lmin});
    worst = std::min(worst, lmin);
  }
  report.max_violation = program.blocks.empty() ? 0.0 : std::max(0.0, -worst);
  if (std::isnan(worst)) report.max_violation = std::numeric_limits<double>::infinity();
  return report;
}

namespace detail {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <class T>
using Blocks = std::vector<Mat<T>>;

template <class T>
T inner(const Mat<T>& a, const Mat<T>& b) {
  return a.cwiseProduct(b).sum();
}

template <class T>
T inner(const Blocks<T>& a, const Blocks<T>& b) {
  T s = 0;
  for (std::size_t j = 0; j < a.size(); ++j) s += inner(a[j], b[j]);
  return s;
}

template <class T>
Mat<T> sym(const Mat<T>& a) {
  return T(0.5) * (a + a.transpose());
}

/// Largest alpha with X + alpha dX >= 0 (infinity when dX >= 0). Negative on failure.
template <class T>
T max_step(const Mat<T>& X, const Mat<T>& dX) {
  Eigen::LLT<Mat<T>> llt(X);
  if (llt.info() != Eigen::Success) return T(-1);
  Mat<T> w = llt.matrixL().solve(dX);
  w = llt.matrixL().solve(Mat<T>(w.transpose()));
  const T lmin = min_eigenvalue(sym<T>(w));
  if (!std::isfinite(static_cast<double>(lmin))) return T(-1);
  return lmin >= T(0) ? std::numeric_limits<T>::infinity() : T(-1) / lmin;
}

template <class T>
T max_step(const Blocks<T>& X, const Blocks<T>& dX) {
  T a = std::numeric_limits<T>::infinity();
  for (std::size_t j = 0; j < X.size(); ++j) {
    const T aj = max_step<T>(X[j], dX[j]);
    if (aj < T(0)) return T(-1);
    a = std::min(a, aj);
  }
  return a;
}

template <class T>
struct ScaledTerm {
  int var;
  Mat<T> coeff;
};

/// Program with unit-Frobenius blocks and unit-infinity-norm objective.
template <class T>
struct ScaledProgram {
  int num_vars = 0;
  Vec<T> c;
  Blocks<T> F0;
  std::vector<std::vector<ScaledTerm<T>>> terms;

  explicit ScaledProgram(const LmiProgram& p) : num_vars(p.num_vars) {
    const double cn = p.objective.cwiseAbs().maxCoeff();
    c = (p.objective * (cn > 0.0 ? 1.0 / cn : 1.0)).cast<T>();
    for (const auto& b : p.blocks) {
      double norm2 = b.constant.squaredNorm();
      for (const auto& t : b.terms) norm2 += t.coeff.squaredNorm();
      const T s = norm2 > 0.0 ? T(1) / std::sqrt(T(norm2)) : T(1);
      F0.push_back(b.constant.cast<T>() * s);
      std::vector<ScaledTerm<T>> ts;
      for (const auto& t : b.terms) ts.push_back({t.var, t.coeff.cast<T>() * s});
      terms.push_back(std::move(ts));
    }
  }

  std::size_t block_count() const { return F0.size(); }

  Mat<T> evaluate(std::size_t j, const Vec<T>& x) const {
    Mat<T> out = F0[j];
    for (const auto& t : terms[j]) out += x(t.var) * t.coeff;
    return out;
  }

  /// (sum_j F_jk . X_j)_k
  Vec<T> adjoint(const Blocks<T>& X) const {
    Vec<T> out = Vec<T>::Zero(num_vars);
    for (std::size_t j = 0; j < F0.size(); ++j)
      for (const auto& t : terms[j]) out(t.var) += inner<T>(t.coeff, X[j]);
    return out;
  }

  Mat<T> apply(std::size_t j, const Vec<T>& dx) const {
    Mat<T> out = Mat<T>::Zero(F0[j].rows(), F0[j].cols());
    for (const auto& t : terms[j]) out += dx(t.var) * t.coeff;
    return out;
  }
};

template <class T>
SdpSolution solve_sdp_impl(const LmiProgram& program, const SolverSettings& settings) {
  const ScaledProgram<T> sp(program);
  const std::size_t J = sp.block_count();
  const int K = sp.num_vars;

  std::vector<bool> used(static_cast<std::size_t>(K), false);
  for (const auto& ts : sp.terms)
    for (const auto& t : ts) used[static_cast<std::size_t>(t.var)] = true;
  for (int k = 0; k < K; ++k)
    if (!used[static_cast<std::size_t>(k)] && sp.c(k) != T(0))
      throw InvalidArgument("variable " + std::to_string(k) + " has a cost but appears in no block");

  SdpSolution sol;
  Vec<T> y = Vec<T>::Zero(K);

  auto finish = [&](SdpStatus status) {
    sol.x = y.template cast<double>();
    sol.status = status;
    sol.objective_value = program.objective.dot(sol.x);
    sol.max_residual = residuals(program, sol.x).max_violation;
    if ((status == SdpStatus::optimal || status == SdpStatus::feasible) && !(sol.max_residual <= settings.tol))
      sol.status = SdpStatus::max_iterations;
    // A breakdown at a point that already satisfies every LMI still yields a usable point.
    if (status == SdpStatus::numerical_failure && sol.max_residual <= settings.tol && sol.iterations > 0)
      sol.status = SdpStatus::feasible;
    return sol;
  };

  if (J == 0) {
    if (sp.c.cwiseAbs().maxCoeff() > T(0)) {
      sol.certificate = "objective unbounded: no constraints";
      return finish(SdpStatus::numerical_failure);
    }
    return finish(SdpStatus::optimal);
  }

  // Initial point.
  Blocks<T> X(J), S(J);
  int total_dim = 0;
  T f0_norm = 0;
  for (std::size_t j = 0; j < J; ++j) {
    const int n = static_cast<int>(sp.F0[j].rows());
    total_dim += n;
    f0_norm += sp.F0[j].squaredNorm();
    T xi = std::max(T(10), std::sqrt(T(n)));
    T eta = std::max(xi, sp.F0[j].norm());
    for (const auto& t : sp.terms[j]) {
      xi = std::max(xi, T(n) * (T(1) + std::abs(sp.c(t.var))) / (T(1) + t.coeff.norm()));
      eta = std::max(eta, t.coeff.norm());
    }
    X[j] = xi * Mat<T>::Identity(n, n);
    S[j] = eta * Mat<T>::Identity(n, n);
  }
  f0_norm = std::sqrt(f0_norm);
  const T c_norm = sp.c.norm();
  const T tol = T(settings.tol);
  const T gamma = T(settings.step_fraction);

  for (int it = 0; it <= settings.max_iterations; ++it) {
    sol.iterations = it;

    // Residuals: D = S - F(y) (LMI side), p = c - A^T X (equality side).
    Blocks<T> D(J);
    T d_norm2 = 0;
    for (std::size_t j = 0; j < J; ++j) {
      D[j] = S[j] - sp.evaluate(j, y);
      d_norm2 += D[j].squaredNorm();
    }
    const Vec<T> p = sp.c - sp.adjoint(X);
    const T xs = inner<T>(X, S);
    const T mu = xs / T(total_dim);
    const T pobj = -inner<T>(sp.F0, X);
    const T dobj = sp.c.dot(y);
    const T denom = T(1) + std::abs(pobj) + std::abs(dobj);
    const T pinf = p.norm() / (T(1) + c_norm);
    const T dinf = std::sqrt(d_norm2) / (T(1) + f0_norm);
    const T rgap = std::abs(dobj - pobj) / denom;
    const T cgap = xs / denom;
    sol.primal_infeasibility = static_cast<double>(pinf);
    sol.dual_infeasibility = static_cast<double>(dinf);
    sol.relative_gap = static_cast<double>(std::max(rgap, cgap));

    if (settings.verbose)
      std::fprintf(stderr, "%3d  pobj % .10e  dobj % .10e  pinf %.2e  dinf %.2e  gap %.2e  mu %.2e\n", it,
                   static_cast<double>(pobj), static_cast<double>(dobj), sol.primal_infeasibility,
                   sol.dual_infeasibility, sol.relative_gap, static_cast<double>(mu));

    if (!std::isfinite(static_cast<double>(xs)) || !y.allFinite()) {
      sol.certificate = "non-finite iterate";
      return finish(SdpStatus::numerical_failure);
    }

    if (pinf <= tol && dinf <= tol && rgap <= tol && cgap <= tol) {
      if (residuals(program, y.template cast<double>()).max_violation <= settings.tol)
        return finish(SdpStatus::optimal);
    }

    // Farkas ray: X >= 0 with F_k . X ~ 0 and F0 . X < 0 certifies the LMI is empty.
    T trace_x = 0;
    for (const auto& xj : X) trace_x += xj.trace();
    if (trace_x > T(settings.infeasibility_trace)) {
      const T descent = -inner<T>(sp.F0, X) / trace_x;
      const T ray_res = sp.adjoint(X).norm() / trace_x;
      if (descent > T(0) && ray_res <= T(1e-6) * descent) {
        std::ostringstream os;
        os.precision(6);
        os << std::scientific << "Farkas certificate: trace(X) = " << static_cast<double>(trace_x)
           << ", -F0.X/trace = " << static_cast<double>(descent)
           << ", |A^T X|/trace = " << static_cast<double>(ray_res);
        sol.certificate = os.str();
        return finish(SdpStatus::infeasible);
      }
    }

    if (it == settings.max_iterations) break;

    // Schur complement M_kl = sum_j tr(F_jk X_j F_jl S_j^-1).
    Blocks<T> Sinv(J);
    for (std::size_t j = 0; j < J; ++j) {
      Eigen::LLT<Mat<T>> llt(S[j]);
      if (llt.info() != Eigen::Success) {
        sol.certificate = "slack matrix lost definiteness";
        return finish(SdpStatus::numerical_failure);
      }
      Sinv[j] = sym<T>(llt.solve(Mat<T>::Identity(S[j].rows(), S[j].cols())));
    }
    Mat<T> M = Mat<T>::Zero(K, K);
    for (std::size_t j = 0; j < J; ++j) {
      for (const auto& tk : sp.terms[j]) {
        const Mat<T> G = X[j] * tk.coeff * Sinv[j];
        for (const auto& tl : sp.terms[j]) M(tk.var, tl.var) += inner<T>(tl.coeff, G.transpose());
      }
    }
    M = sym<T>(M);
    for (int k = 0; k < K; ++k)
      if (!used[static_cast<std::size_t>(k)]) M(k, k) = T(1);

    // Near the optimum M becomes ill-conditioned; a diagonal shift keeps the
    // factorization alive and refinement against the unshifted M restores accuracy.
    Eigen::LDLT<Mat<T>> chol;
    {
      const T dmax = M.diagonal().cwiseAbs().maxCoeff();
      T shift = 0;
      bool factored = false;
      for (int attempt = 0; attempt < 8 && !factored; ++attempt) {
        chol.compute(M + shift * Mat<T>::Identity(K, K));
        factored = chol.info() == Eigen::Success;
        shift = shift == T(0) ? std::numeric_limits<T>::epsilon() * dmax : shift * T(100);
      }
      if (!factored) {
        sol.certificate = "Schur complement factorization failed";
        return finish(SdpStatus::numerical_failure);
      }
    }

    Blocks<T> XDS(J);
    for (std::size_t j = 0; j < J; ++j) XDS[j] = X[j] * D[j] * Sinv[j];

    // Direction for target T: dX = sym(T - X dS S^-1), dS = A dy - D.
    auto direction = [&](const Blocks<T>& target, Vec<T>& dy, Blocks<T>& dX, Blocks<T>& dS) {
      Vec<T> rhs = -p;
      for (std::size_t j = 0; j < J; ++j) {
        const Mat<T> R = target[j] + XDS[j];
        for (const auto& t : sp.terms[j]) rhs(t.var) += inner<T>(t.coeff, R);
      }
      for (int k = 0; k < K; ++k)
        if (!used[static_cast<std::size_t>(k)]) rhs(k) = T(0);
      dy = chol.solve(rhs);
      for (int refine = 0; refine < 2; ++refine) dy += chol.solve(Vec<T>(rhs - M * dy));
      for (std::size_t j = 0; j < J; ++j) {
        dS[j] = sp.apply(j, dy) - D[j];
        dX[j] = sym<T>(target[j] - X[j] * dS[j] * Sinv[j]);
      }
    };

    // Predictor.
    Blocks<T> target(J), dXa(J), dSa(J);
    Vec<T> dya;
    for (std::size_t j = 0; j < J; ++j) target[j] = -X[j];
    direction(target, dya, dXa, dSa);
    const T ap_max = max_step<T>(X, dXa);
    const T ad_max = max_step<T>(S, dSa);
    if (ap_max < T(0) || ad_max < T(0) || !dya.allFinite()) {
      sol.certificate = "predictor step failed";
      return finish(SdpStatus::numerical_failure);
    }
    const T apa = std::min(T(1), ap_max);
    const T ada = std::min(T(1), ad_max);
    T mu_aff = 0;
    for (std::size_t j = 0; j < J; ++j) mu_aff += inner<T>(Mat<T>(X[j] + apa * dXa[j]), Mat<T>(S[j] + ada * dSa[j]));
    mu_aff /= T(total_dim);
    const T ratio = std::max(T(0), mu_aff / mu);
    const T expon = std::max(T(1), T(3) * std::min(apa, ada) * std::min(apa, ada));
    const T sigma = std::min(T(1), std::pow(ratio, expon));

    // Corrector.
    Blocks<T> dX(J), dS(J);
    Vec<T> dy;
    for (std::size_t j = 0; j < J; ++j) target[j] = sigma * mu * Sinv[j] - X[j] - dXa[j] * dSa[j] * Sinv[j];
    direction(target, dy, dX, dS);
    const T ap = max_step<T>(X, dX);
    const T ad = max_step<T>(S, dS);
    if (ap < T(0) || ad < T(0) || !dy.allFinite()) {
      sol.certificate = "corrector step failed";
      return finish(SdpStatus::numerical_failure);
    }
    const T alpha_p = std::min(T(1), gamma * ap);
    const T alpha_d = std::min(T(1), gamma * ad);

    for (std::size_t j = 0; j < J; ++j) {
      X[j] = sym<T>(X[j] + alpha_p * dX[j]);
      S[j] = sym<T>(S[j] + alpha_d * dS[j]);
    }
    y += alpha_d * dy;
  }

  sol.iterations = settings.max_iterations;
  sol.certificate = "iteration cap reached";
  const bool feasible_point = residuals(program, y.template cast<double>()).max_violation <= settings.tol;
  return finish(feasible_point ? SdpStatus::feasible : SdpStatus::max_iterations);
}

}  // namespace detail

inline SdpSolution solve_sdp(const LmiProgram& program, const SolverSettings& settings = {}) {
  program.validate();
  settings.validate();
  if (settings.extended_precision) return detail::solve_sdp_impl<long double>(program, settings);
  return detail::solve_sdp_impl<double>(program, settings);
}

}  // namespace uvc
