#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "uvc/errors.hpp"

namespace uvc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Uncertain input map B = sum_i alpha_i B_i over a set of vertex matrices.
class PolytopicSystem {
 public:
  explicit PolytopicSystem(std::vector<Matrix> vertices) : vertices_(std::move(vertices)) {
    if (vertices_.empty()) throw InvalidArgument("polytopic system needs at least one vertex");
    const auto rows = vertices_.front().rows();
    const auto cols = vertices_.front().cols();
    if (rows < 1 || cols < 1) throw InvalidArgument("vertex matrices must be non-empty");
    for (const auto& v : vertices_) {
      if (v.rows() != rows || v.cols() != cols)
        throw InvalidArgument("all vertex matrices must share the same shape");
      if (!v.allFinite()) throw InvalidArgument("vertex matrix has non-finite entries");
    }
  }

  int states() const { return static_cast<int>(vertices_.front().rows()); }
  int inputs() const { return static_cast<int>(vertices_.front().cols()); }
  int vertex_count() const { return static_cast<int>(vertices_.size()); }
  const Matrix& vertex(int i) const { return vertices_.at(static_cast<std::size_t>(i)); }
  const std::vector<Matrix>& vertices() const { return vertices_; }

  /// max_i ||B_i||_2
  double max_vertex_norm() const {
    double out = 0.0;
    for (const auto& v : vertices_) {
      Eigen::JacobiSVD<Matrix> svd(v);
      out = std::max(out, svd.singularValues()(0));
    }
    return out;
  }

 private:
  std::vector<Matrix> vertices_;
};

/// Convex weights over polytope vertices.
class SimplexWeights {
 public:
  explicit SimplexWeights(Vector alpha) : alpha_(std::move(alpha)) {
    if (alpha_.size() < 1) throw InvalidArgument("simplex weights must be non-empty");
    for (Eigen::Index i = 0; i < alpha_.size(); ++i)
      if (!std::isfinite(alpha_(i)) || alpha_(i) < 0.0)
        throw InvalidArgument("simplex weights must be finite and non-negative");
    if (std::abs(alpha_.sum() - 1.0) > 1e-12) throw InvalidArgument("simplex weights must sum to one");
  }

  static SimplexWeights vertex(int count, int index) {
    if (index < 0 || index >= count) throw InvalidArgument("vertex index out of range");
    Vector a = Vector::Zero(count);
    a(index) = 1.0;
    return SimplexWeights(std::move(a));
  }

  /// Scales non-negative entries to sum one (within rounding) before validation.
  static SimplexWeights normalized(const Vector& raw) {
    const double total = raw.sum();
    if (!(total > 0.0)) throw InvalidArgument("weights must have a positive sum");
    Vector a = raw / total;
    // Push the rounding error onto the largest entry so the sum is exact-ish.
    Eigen::Index imax = 0;
    a.maxCoeff(&imax);
    a(imax) += 1.0 - a.sum();
    return SimplexWeights(std::move(a));
  }

  int size() const { return static_cast<int>(alpha_.size()); }
  const Vector& values() const { return alpha_; }

 private:
  Vector alpha_;
};

/// Per-channel actuator limits u_bar.
class SaturationLimits {
 public:
  explicit SaturationLimits(Vector u_bar) : u_bar_(std::move(u_bar)) {
    if (u_bar_.size() < 1) throw InvalidArgument("saturation limits must be non-empty");
    for (Eigen::Index i = 0; i < u_bar_.size(); ++i)
      if (!(u_bar_(i) > 0.0) || !std::isfinite(u_bar_(i)))
        throw InvalidArgument("saturation limits must be positive and finite");
  }

  static SaturationLimits uniform(int m, double level) { return SaturationLimits(Vector::Constant(m, level)); }

  int size() const { return static_cast<int>(u_bar_.size()); }
  double operator[](int i) const { return u_bar_(i); }
  const Vector& values() const { return u_bar_; }

 private:
  Vector u_bar_;
};

}  // namespace uvc
