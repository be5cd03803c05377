#pragma once

#include "z2sync/manifold.hpp"
#include "z2sync/spectral.hpp"
#include "z2sync/types.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <utility>

namespace z2sync {

struct CriticalityReport {
  double grad_residual = 0.0;     // ||S(Y)Y||_F / (1 + ||C||_op)
  double s_min_eig = 0.0;         // smallest eigenvalue estimate of S(Y)
  double s_y_residual = 0.0;      // ||S(Y)Y||_F
  bool is_first_order = false;
  bool is_second_order = false;
  bool is_global = false;         // S(Y)Y ~ 0 and lambda_min(S) >= -tol:
                                  // then X = YY^T solves the SDP relaxation
  double tolerance = 0.0;         // tol_scale * (1 + ||C||_op)
  double cost_op_norm = 0.0;
};

// Checks the two criticality conditions S(Y)Y = 0 and lambda_min(S(Y)) >= 0
// at threshold tol_scale * (1 + ||C||_op). lambda_min(S(Y)) >= 0 on all of
// R^n is sufficient (not necessary) for nonnegativity on tangent directions,
// and together with S(Y)Y = 0 it is exactly the SDP dual certificate.
inline CriticalityReport certify(const CostMatrix& c, const FactorPoint& y,
                                 double tol_scale = 1e-8) {
  require(c.n() == y.n(), "certify: dimension mismatch");
  require(tol_scale > 0.0, "certify: tol_scale must be positive");
  CriticalityReport report;
  report.cost_op_norm = operator_norm(c.entries());
  const double scale = 1.0 + report.cost_op_norm;
  report.tolerance = tol_scale * scale;

  const Matrix cy = c.entries() * y.matrix();
  const Vector d = s_diagonal_from_product(cy, y.matrix());
  report.s_y_residual = (d.asDiagonal() * y.matrix() - cy).norm();
  report.grad_residual = report.s_y_residual / scale;

  Rng rng(derive_seed(0xce47u, streams::kLanczos, static_cast<std::uint64_t>(y.n())));
  LanczosOptions options;
  options.scale = scale;
  auto apply = [&](const Vector& x) -> Vector {
    return d.cwiseProduct(x) - c.entries() * x;
  };
  report.s_min_eig = lanczos_extreme(apply, y.n(), rng, options).smallest.value;

  report.is_first_order = report.s_y_residual <= report.tolerance;
  report.is_second_order = report.s_min_eig >= -report.tolerance;
  report.is_global = report.is_first_order && report.is_second_order;
  return report;
}

// Signs of the top left singular vector of Y. Zero entries resolve to +1 and
// the global sign is normalized so the first label is +1; Eigen's SVD is
// deterministic, which fixes the degenerate-spectrum tie-break.
inline SignVector extract_labels(const FactorPoint& y) {
  Eigen::JacobiSVD<Matrix> svd(y.matrix(), Eigen::ComputeThinU);
  const Vector u0 = svd.matrixU().col(0);
  Eigen::VectorXi labels(y.n());
  for (Index i = 0; i < y.n(); ++i) labels[i] = u0[i] < 0.0 ? -1 : 1;
  if (labels[0] < 0) labels = -labels;
  return SignVector(std::move(labels));
}

struct RecoveryReport {
  SignVector labels;
  bool is_exact = false;      // ||Y - z u*^T||_F <= 1e-6 ||Y||_F
  double rank1_gap = 0.0;     // second singular value of Y
  double correlation = 0.0;   // |<labels, truth>| / n
  double rel_residual = 0.0;  // ||Y - z u*^T||_F / ||Y||_F
  double top_singular = 0.0;
};

inline constexpr double kExactRecoveryTol = 1e-6;

// Tests Y = z u^T against a known truth z, with u* = Y^T z / n (the
// least-squares optimal alignment; invariant to the global sign of z and to
// right-multiplication of Y by an orthogonal matrix).
inline RecoveryReport check_exact_recovery(const FactorPoint& y, const SignVector& z) {
  require(y.n() == z.size(), "check_exact_recovery: dimension mismatch");
  const Vector zr = z.as_reals();
  const Eigen::RowVectorXd u_star = (zr.transpose() * y.matrix()) / static_cast<double>(y.n());
  const double residual = (y.matrix() - zr * u_star).norm();
  const double ynorm = y.matrix().norm();

  Eigen::JacobiSVD<Matrix> svd(y.matrix());
  const auto& sv = svd.singularValues();

  RecoveryReport report{extract_labels(y)};
  report.rel_residual = residual / ynorm;
  report.is_exact = residual <= kExactRecoveryTol * ynorm;
  report.top_singular = sv[0];
  report.rank1_gap = sv.size() > 1 ? sv[1] : 0.0;
  report.correlation =
      std::abs(static_cast<double>(report.labels.entries().dot(z.entries()))) /
      static_cast<double>(z.size());
  return report;
}

struct BruteForceResult {
  SignVector argmax;
  double value = 0.0;
};

inline constexpr Index kBruteForceMaxN = 22;

// Exhaustive maximization of <C, x x^T> over x in {+-1}^n with x_1 = +1
// (global sign symmetry halves the space). Gray-code order with O(n)
// incremental objective updates; ties keep the lexicographically smallest
// pattern (+1 before -1). The returned value is recomputed directly at the
// argmax so incremental rounding never reaches the reported optimum.
inline BruteForceResult brute_force_opt(const CostMatrix& c) {
  const Index n = c.n();
  require(n <= kBruteForceMaxN, "brute_force_opt: n exceeds enumeration bound 22");
  const Matrix& m = c.entries();

  Eigen::VectorXi x = Eigen::VectorXi::Ones(n);
  Vector row_sums = m.rowwise().sum();  // s_i = sum_j C_ij x_j at x = 1
  double value = m.sum();

  Eigen::VectorXi best_x = x;
  double best_value = value;

  auto lex_less = [](const Eigen::VectorXi& a, const Eigen::VectorXi& b) {
    for (Index i = 0; i < a.size(); ++i) {
      if (a[i] != b[i]) return a[i] > b[i];  // +1 sorts before -1
    }
    return false;
  };

  const std::uint64_t patterns = n >= 1 ? (1ULL << (n - 1)) : 1ULL;
  for (std::uint64_t t = 1; t < patterns; ++t) {
    // Gray code: bit k of t flips sign k+1 (sign 0 is pinned to +1).
    const Index k = static_cast<Index>(std::countr_zero(t)) + 1;
    value -= 4.0 * static_cast<double>(x[k]) * row_sums[k];
    row_sums -= (2.0 * static_cast<double>(x[k])) * m.col(k);
    x[k] = -x[k];
    if (value > best_value || (value == best_value && lex_less(x, best_x))) {
      best_value = value;
      best_x = x;
    }
  }

  const Vector xr = best_x.cast<double>();
  return BruteForceResult{SignVector(std::move(best_x)), xr.dot(m * xr)};
}

struct QDecomposition {
  Matrix q;        // Q_ij = ||Y_i - Y_j||^4 / 4
  Vector a;        // a_i = ||W_i||^4 / 4
  Matrix q_tilde;  // Q - a 1^T - 1 a^T, nuclear norm <= 14 ||W||_F^2
  Eigen::RowVectorXd mean;  // u with Y = 1 u^T + W, W^T 1 = 0
  Matrix centered;          // W
};

inline QDecomposition q_decompose(const FactorPoint& y) {
  const Index n = y.n();
  QDecomposition out;
  out.mean = y.matrix().colwise().mean();
  out.centered = y.matrix().rowwise() - out.mean;
  out.a = Vector(n);
  for (Index i = 0; i < n; ++i) {
    const double w2 = out.centered.row(i).squaredNorm();
    out.a[i] = 0.25 * w2 * w2;
  }
  out.q = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      const double d2 = (y.matrix().row(i) - y.matrix().row(j)).squaredNorm();
      out.q(i, j) = out.q(j, i) = 0.25 * d2 * d2;
    }
  out.q_tilde = out.q;
  out.q_tilde.colwise() -= out.a;
  out.q_tilde.rowwise() -= out.a.transpose();
  return out;
}

inline double nuclear_norm(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues().sum();
}

// Closed form of E[Ydot Ydot^T] = (r-3) 11^T + 2 YY^T + Q for tangent
// directions Ydot_i = Gamma - <Gamma, Y_i> Y_i with Gamma a standard Gaussian
// row; i.e. E<Ydot_i, Ydot_j> = r - 2 + <Y_i, Y_j>^2. Serves as the analytic
// oracle for the Monte Carlo identity.
inline Matrix expected_direction_matrix(const FactorPoint& y) {
  const double r = static_cast<double>(y.r());
  const Index n = y.n();
  const Matrix gram = y.matrix() * y.matrix().transpose();
  return Matrix::Constant(n, n, r - 3.0) + 2.0 * gram + q_decompose(y).q;
}

}  // namespace z2sync
