#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "uvc/types.hpp"

namespace uvc {

/// Matrix-valued affine function of the decision vector:
///   E(x) = C + sum_k x_k A_k
/// Only the variables that appear are stored. Terms are ordered by index so
/// any program built from these is reproducible bit for bit.
class AffineMatrix {
 public:
  AffineMatrix() = default;
  AffineMatrix(int rows, int cols) : constant_(Matrix::Zero(rows, cols)) {}
  explicit AffineMatrix(Matrix constant) : constant_(std::move(constant)) {}

  static AffineMatrix variable(int rows, int cols, int var, Matrix coeff) {
    AffineMatrix out(rows, cols);
    out.terms_.emplace(var, std::move(coeff));
    return out;
  }

  int rows() const { return static_cast<int>(constant_.rows()); }
  int cols() const { return static_cast<int>(constant_.cols()); }
  const Matrix& constant() const { return constant_; }
  const std::map<int, Matrix>& terms() const { return terms_; }

  Matrix evaluate(const Vector& x) const {
    Matrix out = constant_;
    for (const auto& [k, a] : terms_) out += x(k) * a;
    return out;
  }

  AffineMatrix transpose() const {
    AffineMatrix out(constant_.transpose());
    for (const auto& [k, a] : terms_) out.terms_.emplace(k, a.transpose());
    return out;
  }

  AffineMatrix& operator+=(const AffineMatrix& rhs) {
    check_same_shape(rhs);
    constant_ += rhs.constant_;
    for (const auto& [k, a] : rhs.terms_) {
      auto it = terms_.find(k);
      if (it == terms_.end())
        terms_.emplace(k, a);
      else
        it->second += a;
    }
    return *this;
  }

  AffineMatrix& operator*=(double s) {
    constant_ *= s;
    for (auto& [k, a] : terms_) a *= s;
    return *this;
  }

  friend AffineMatrix operator+(AffineMatrix lhs, const AffineMatrix& rhs) { return lhs += rhs; }
  friend AffineMatrix operator-(AffineMatrix lhs, const AffineMatrix& rhs) { return lhs += rhs * -1.0; }
  friend AffineMatrix operator+(AffineMatrix lhs, const Matrix& rhs) { return lhs += AffineMatrix(rhs); }
  friend AffineMatrix operator-(AffineMatrix lhs, const Matrix& rhs) { return lhs += AffineMatrix(Matrix(-rhs)); }
  friend AffineMatrix operator*(AffineMatrix lhs, double s) { return lhs *= s; }
  friend AffineMatrix operator*(double s, AffineMatrix rhs) { return rhs *= s; }
  friend AffineMatrix operator-(AffineMatrix e) { return e *= -1.0; }

  friend AffineMatrix operator*(const Matrix& left, const AffineMatrix& e) {
    if (left.cols() != e.rows()) throw InvalidArgument("affine product: inner dimensions differ");
    AffineMatrix out(Matrix(left * e.constant_));
    for (const auto& [k, a] : e.terms_) out.terms_.emplace(k, left * a);
    return out;
  }

  friend AffineMatrix operator*(const AffineMatrix& e, const Matrix& right) {
    if (e.cols() != right.rows()) throw InvalidArgument("affine product: inner dimensions differ");
    AffineMatrix out(Matrix(e.constant_ * right));
    for (const auto& [k, a] : e.terms_) out.terms_.emplace(k, a * right);
    return out;
  }

  /// Assembles a block matrix from a grid of pieces. Rows of the grid must
  /// agree on height, columns on width.
  static AffineMatrix blocks(const std::vector<std::vector<AffineMatrix>>& grid) {
    if (grid.empty() || grid.front().empty()) throw InvalidArgument("empty block grid");
    std::vector<int> heights, widths;
    for (const auto& row : grid) heights.push_back(row.front().rows());
    for (const auto& cell : grid.front()) widths.push_back(cell.cols());
    int total_rows = 0, total_cols = 0;
    for (int h : heights) total_rows += h;
    for (int w : widths) total_cols += w;

    AffineMatrix out(total_rows, total_cols);
    int r0 = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (grid[i].size() != widths.size()) throw InvalidArgument("ragged block grid");
      int c0 = 0;
      for (std::size_t j = 0; j < grid[i].size(); ++j) {
        const auto& cell = grid[i][j];
        if (cell.rows() != heights[i] || cell.cols() != widths[j])
          throw InvalidArgument("block grid cell has inconsistent shape");
        out.constant_.block(r0, c0, cell.rows(), cell.cols()) = cell.constant_;
        for (const auto& [k, a] : cell.terms_) {
          auto it = out.terms_.find(k);
          if (it == out.terms_.end()) it = out.terms_.emplace(k, Matrix::Zero(total_rows, total_cols)).first;
          it->second.block(r0, c0, a.rows(), a.cols()) += a;
        }
        c0 += widths[j];
      }
      r0 += heights[i];
    }
    return out;
  }

 private:
  void check_same_shape(const AffineMatrix& rhs) const {
    if (rows() != rhs.rows() || cols() != rhs.cols()) throw InvalidArgument("affine sum: shapes differ");
  }

  Matrix constant_;
  std::map<int, Matrix> terms_;
};

/// One coefficient matrix of an LMI block, attached to decision variable `var`.
struct LmiTerm {
  int var = 0;
  Matrix coeff;
};

/// Affine constraint F0 + sum_k x_k F_k >= 0 (positive semidefinite).
struct LmiBlock {
  std::string label;
  Matrix constant;
  std::vector<LmiTerm> terms;

  int size() const { return static_cast<int>(constant.rows()); }

  Matrix evaluate(const Vector& x) const {
    Matrix out = constant;
    for (const auto& t : terms) out += x(t.var) * t.coeff;
    return out;
  }

  /// Converts a symmetric affine expression; each coefficient is symmetrized
  /// exactly so the stored block is bit-symmetric.
  static LmiBlock from_affine(std::string label, const AffineMatrix& e) {
    if (e.rows() != e.cols()) throw InvalidArgument("LMI block '" + label + "' is not square");
    LmiBlock b;
    b.label = std::move(label);
    b.constant = 0.5 * (e.constant() + e.constant().transpose());
    for (const auto& [k, a] : e.terms()) {
      Matrix sym = 0.5 * (a + a.transpose());
      if (sym.cwiseAbs().maxCoeff() == 0.0) continue;
      b.terms.push_back({k, std::move(sym)});
    }
    return b;
  }
};

/// minimize c^T x  subject to  every block evaluated at x is PSD.
struct LmiProgram {
  int num_vars = 0;
  Vector objective;
  std::vector<LmiBlock> blocks;

  /// Throws InvalidArgument when the program is malformed.
  void validate() const {
    if (num_vars < 1) throw InvalidArgument("program has no decision variables");
    if (objective.size() != num_vars) throw InvalidArgument("objective length differs from variable count");
    if (!objective.allFinite()) throw InvalidArgument("objective has non-finite entries");
    for (const auto& b : blocks) {
      const auto n = b.constant.rows();
      if (n < 1 || b.constant.cols() != n) throw InvalidArgument("block '" + b.label + "' is not square");
      auto check = [&](const Matrix& m) {
        if (m.rows() != n || m.cols() != n) throw InvalidArgument("block '" + b.label + "' has mismatched coefficient");
        if (!m.allFinite()) throw InvalidArgument("block '" + b.label + "' has non-finite entries");
        const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
        if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
          throw InvalidArgument("block '" + b.label + "' has a non-symmetric coefficient");
      };
      check(b.constant);
      for (const auto& t : b.terms) {
        if (t.var < 0 || t.var >= num_vars) throw InvalidArgument("block '" + b.label + "' references unknown variable");
        check(t.coeff);
      }
    }
  }

  const LmiBlock* find(const std::string& label) const {
    for (const auto& b : blocks)
      if (b.label == label) return &b;
    return nullptr;
  }

  int count_prefix(const std::string& prefix) const {
    int n = 0;
    for (const auto& b : blocks)
      if (b.label.rfind(prefix, 0) == 0) ++n;
    return n;
  }
};

}  // namespace uvc
