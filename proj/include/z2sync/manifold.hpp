#pragma once

#include "z2sync/rng.hpp"
#include "z2sync/types.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace z2sync {

// Row-norm feasibility tolerance for points on the sphere product
// {Y : ddiag(YY^T) = I_n}; rows are re-normalized by every retraction.
inline constexpr double kRowNormTol = 1e-12;
inline constexpr double kTangencyTol = 1e-12;

// Feasible point of the rank-r relaxation: n×r with unit-norm rows.
class FactorPoint {
 public:
  explicit FactorPoint(Matrix y) : y_(std::move(y)) {
    require(y_.rows() >= 1 && y_.cols() >= 1, "FactorPoint: empty");
    require(y_.allFinite(), "FactorPoint: non-finite entry");
    for (Index i = 0; i < y_.rows(); ++i)
      require(std::abs(y_.row(i).norm() - 1.0) <= kRowNormTol,
              "FactorPoint: row norm deviates from 1 beyond 1e-12");
  }

  // Row-normalizes the input. Throws on a zero row.
  static FactorPoint from_rows_normalized(Matrix y) {
    for (Index i = 0; i < y.rows(); ++i) {
      const double norm = y.row(i).norm();
      require(norm > 0.0, "FactorPoint: cannot normalize a zero row");
      y.row(i) /= norm;
    }
    return FactorPoint(std::move(y));
  }

  Index n() const { return y_.rows(); }
  Index r() const { return y_.cols(); }
  const Matrix& matrix() const { return y_; }

 private:
  Matrix y_;
};

// Tangent direction at a base point: diag(Y V^T) = 0 row-wise.
class TangentMatrix {
 public:
  TangentMatrix(Matrix v, const FactorPoint& base) : v_(std::move(v)), base_(base.matrix()) {
    require(v_.rows() == base_.rows() && v_.cols() == base_.cols(),
            "TangentMatrix: dimension mismatch with base point");
    for (Index i = 0; i < v_.rows(); ++i) {
      const double overlap = std::abs(v_.row(i).dot(base_.row(i)));
      require(overlap <= kTangencyTol * (1.0 + v_.row(i).norm()),
              "TangentMatrix: row not orthogonal to base row");
    }
  }

  Index n() const { return v_.rows(); }
  Index r() const { return v_.cols(); }
  const Matrix& matrix() const { return v_; }
  const Matrix& base() const { return base_; }
  double norm() const { return v_.norm(); }

 private:
  Matrix v_;
  Matrix base_;
};

// S(Y) = ddiag(C Y Y^T) - C; symmetric.
class CertificateMatrix {
 public:
  explicit CertificateMatrix(Matrix s) : s_(std::move(s)) {
    require(s_.rows() == s_.cols(), "CertificateMatrix: not square");
    const double scale = s_.norm();
    require((s_ - s_.transpose()).norm() <= 1e-12 * (1.0 + scale),
            "CertificateMatrix: asymmetric");
  }

  Index n() const { return s_.rows(); }
  const Matrix& matrix() const { return s_; }

 private:
  Matrix s_;
};

inline FactorPoint random_point(Index n, Index r, Rng& rng) {
  require(n >= 1 && r >= 1, "random_point: need n >= 1, r >= 1");
  Matrix y(n, r);
  for (Index i = 0; i < n; ++i) {
    double norm = 0.0;
    // Normalized Gaussian rows are uniform on the sphere. A zero row has
    // probability zero but would poison the normalization, so redraw.
    do {
      for (Index j = 0; j < r; ++j) y(i, j) = rng.normal();
      norm = y.row(i).norm();
    } while (norm == 0.0);
    y.row(i) /= norm;
  }
  return FactorPoint(std::move(y));
}

inline FactorPoint random_point(Index n, Index r, std::uint64_t seed) {
  Rng rng(seed);
  return random_point(n, r, rng);
}

// <C, Y Y^T> without forming Y Y^T.
inline double objective(const Matrix& c, const Matrix& y) {
  require(c.rows() == c.cols() && c.rows() == y.rows(), "objective: dimension mismatch");
  return ((c * y).array() * y.array()).sum();
}

inline double objective(const CostMatrix& c, const FactorPoint& y) {
  return objective(c.entries(), y.matrix());
}

// Diagonal of C Y Y^T, i.e. d_i = <(CY)_i, Y_i>, given the product CY.
inline Vector s_diagonal_from_product(const Matrix& cy, const Matrix& y) {
  return (cy.array() * y.array()).rowwise().sum();
}

inline CertificateMatrix s_matrix(const CostMatrix& c, const FactorPoint& y) {
  require(c.n() == y.n(), "s_matrix: dimension mismatch");
  const Matrix cy = c.entries() * y.matrix();
  Matrix s = -c.entries();
  s.diagonal() += s_diagonal_from_product(cy, y.matrix());
  return CertificateMatrix(std::move(s));
}

// Row-wise tangent projection V_i -> V_i - <V_i, Y_i> Y_i. Idempotent.
inline Matrix project_tangent_raw(const Matrix& y, const Matrix& ambient) {
  require(ambient.rows() == y.rows() && ambient.cols() == y.cols(),
          "project_tangent: dimension mismatch");
  Matrix v = ambient;
  for (Index i = 0; i < y.rows(); ++i) v.row(i) -= v.row(i).dot(y.row(i)) * y.row(i);
  return v;
}

inline TangentMatrix project_tangent(const FactorPoint& y, const Matrix& ambient) {
  return TangentMatrix(project_tangent_raw(y.matrix(), ambient), y);
}

// Riemannian gradient of <C, YY^T>: rows 2[(CY)_i - <(CY)_i, Y_i> Y_i],
// which equals -2 (S(Y) Y) row-wise (S(Y)Y is tangent automatically).
inline Matrix riemannian_gradient_raw(const Matrix& c, const Matrix& y) {
  require(c.rows() == c.cols() && c.rows() == y.rows(),
          "riemannian_gradient: dimension mismatch");
  const Matrix cy = c * y;
  const Vector d = s_diagonal_from_product(cy, y);
  return 2.0 * (cy - d.asDiagonal() * y);
}

inline TangentMatrix riemannian_gradient(const CostMatrix& c, const FactorPoint& y) {
  return TangentMatrix(riemannian_gradient_raw(c.entries(), y.matrix()), y);
}

// Metric-projection retraction: rows (Y_i + t V_i) / ||Y_i + t V_i||.
// t = 0 returns Y bit-exactly. Throws if a row degenerates to zero.
inline FactorPoint retract(const FactorPoint& y, const TangentMatrix& v, double t) {
  require(v.n() == y.n() && v.r() == y.r(), "retract: dimension mismatch");
  require(t >= 0.0 && std::isfinite(t), "retract: step must be finite and >= 0");
  if (t == 0.0) return y;
  Matrix moved = y.matrix() + t * v.matrix();
  for (Index i = 0; i < moved.rows(); ++i) {
    const double norm = moved.row(i).norm();
    if (norm == 0.0)
      throw std::domain_error("retract: degenerate step produced a zero row; shrink t");
    moved.row(i) /= norm;
  }
  return FactorPoint(std::move(moved));
}

// <S(Y), V V^T>. Nonnegative for all tangent V at a second-order critical
// point of the maximization (the paper's sign convention).
inline double hessian_form(const Matrix& c, const Matrix& y, const Matrix& v) {
  require(c.rows() == c.cols() && c.rows() == y.rows() && y.rows() == v.rows() &&
              y.cols() == v.cols(),
          "hessian_form: dimension mismatch");
  const Matrix cy = c * y;
  const Vector d = s_diagonal_from_product(cy, y);
  // <S, VV^T> = sum_i <(S V)_i, V_i> with S V = d ∘ V - C V.
  const Matrix sv = d.asDiagonal() * v - c * v;
  return (sv.array() * v.array()).sum();
}

inline double hessian_form(const CostMatrix& c, const FactorPoint& y, const TangentMatrix& v) {
  return hessian_form(c.entries(), y.matrix(), v.matrix());
}

}  // namespace z2sync
