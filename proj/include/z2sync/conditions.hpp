#pragma once

#include "z2sync/spectral.hpp"
#include "z2sync/types.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace z2sync {

// Second-smallest eigenvalue of L = diag(A1) - A. Dense below
// kDenseEigCutoff, deflated Lanczos above; the two are cross-validated in
// tests. Positive iff the graph is connected.
inline double algebraic_connectivity(const Graph& g) {
  const Matrix l = g.laplacian();
  if (g.n() < 2) return 0.0;
  if (g.n() < kDenseEigCutoff) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(l, Eigen::EigenvaluesOnly);
    return solver.eigenvalues()[1];
  }
  return detail::lambda2_iterative(l);
}

struct RhoDeltaResult {
  double max = 0.0;
  Vector per_row;  // rho_i = -z_i sum_{j != i} Delta_ij z_j
};

inline RhoDeltaResult rho_delta(const NoiseMatrix& delta, const SignVector& z) {
  require(delta.n() == z.size(), "rho_delta: dimension mismatch");
  const Vector zr = z.as_reals();
  RhoDeltaResult out;
  out.per_row = -zr.cwiseProduct(delta.entries() * zr);
  out.max = out.per_row.maxCoeff();
  return out;
}

struct DzMinResult {
  double min = 0.0;
  Vector per_vertex;  // d^z_i = z_i sum_{j != i} A_ij z_j
};

// Signed degrees: same-cluster minus other-cluster neighbor weight.
inline DzMinResult dz_min(const Graph& a, const SignVector& z) {
  require(a.n() == z.size(), "dz_min: dimension mismatch");
  const Vector zr = z.as_reals();
  DzMinResult out;
  out.per_vertex = zr.cwiseProduct(a.weights() * zr);
  out.min = out.per_vertex.minCoeff();
  return out;
}

struct Z2DetermReport {
  double lambda2 = 0.0;
  double rho_delta_max = 0.0;
  double delta_opnorm = 0.0;
  double lhs = 0.0;  // rho^Delta + (r+11)/(r-3) ||Delta||
  double rhs = 0.0;  // (r-3)/(r-1) lambda_2
  bool satisfied = false;
  double margin = 0.0;        // rhs - lhs
  double proof_margin = 0.0;  // (r-3)[lambda2 - rho] - 2(rho v 0) - (r+11)||Delta||
  int r = 0;
};

// Deterministic exact-recovery condition
//   rho^Delta + (r+11)/(r-3) ||Delta|| <= (r-3)/(r-1) lambda_2   (r >= 4),
// or, for r = 3 with Delta = 0, connectivity alone. proof_margin carries the
// sharper inequality the proof actually establishes, for diagnostics only.
inline Z2DetermReport check_z2_determ(const Graph& g, const NoiseMatrix& delta,
                                      const SignVector& z, int r) {
  require(g.n() == delta.n() && g.n() == z.size(), "check_z2_determ: dimension mismatch");
  require(r >= 3, "check_z2_determ: requires r >= 3");
  const bool delta_zero = delta.is_zero();
  require(r >= 4 || delta_zero, "check_z2_determ: r = 3 is only supported with Delta = 0");

  Z2DetermReport report;
  report.r = r;
  report.lambda2 = algebraic_connectivity(g);
  report.rho_delta_max = delta_zero ? 0.0 : rho_delta(delta, z).max;
  report.delta_opnorm = delta_zero ? 0.0 : operator_norm(delta.entries());

  const double rf = static_cast<double>(r);
  if (r == 3) {
    report.lhs = 0.0;
    report.rhs = report.lambda2;
    report.margin = report.lambda2;
    report.satisfied = report.lambda2 > 1e-10 * static_cast<double>(g.n());
    report.proof_margin = 0.0;
    return report;
  }
  report.lhs = report.rho_delta_max + (rf + 11.0) / (rf - 3.0) * report.delta_opnorm;
  report.rhs = (rf - 3.0) / (rf - 1.0) * report.lambda2;
  report.margin = report.rhs - report.lhs;
  report.satisfied = report.margin >= 0.0;
  report.proof_margin = (rf - 3.0) * (report.lambda2 - report.rho_delta_max) -
                        2.0 * std::max(report.rho_delta_max, 0.0) -
                        (rf + 11.0) * report.delta_opnorm;
  return report;
}

// E A = (p-q)/2 zz^T + (p+q)/2 11^T - p I for the balanced binary SBM.
inline Matrix sbm_expected_adjacency(const SignVector& z, double p, double q) {
  const Index n = z.size();
  const Vector zr = z.as_reals();
  Matrix ea = 0.5 * (p - q) * (zr * zr.transpose());
  ea.array() += 0.5 * (p + q);
  ea.diagonal().array() -= p;
  return ea;
}

struct SbmDetermReport {
  double dz_min = 0.0;
  double a_centered_opnorm = 0.0;  // ||A - E A||
  double lhs = 0.0;                // d^z_min
  double rhs = 0.0;                // variant-dependent bound
  bool satisfied = false;
  double margin = 0.0;             // lhs - rhs
  SbmCentering variant = SbmCentering::kMeanEstimate;
  int r = 0;
};

// Deterministic SBM recovery condition:
//   mean-estimate centering: d^z_min >= (r+11)/(r-3) (2||A - EA|| + p) + n(p-q)/(r-1)
//   known-(p,q) centering:   d^z_min >= (r+11)/(r-3)  ||A - EA||       + n(p-q)/(r-1)
inline SbmDetermReport check_sbm_determ(const Graph& a, const SignVector& z, double p, double q,
                                        int r, SbmCentering variant) {
  require(a.n() == z.size(), "check_sbm_determ: dimension mismatch");
  require(r >= 4, "check_sbm_determ: requires r >= 4");
  require(q < p, "check_sbm_determ: requires q < p");

  SbmDetermReport report;
  report.r = r;
  report.variant = variant;
  report.dz_min = dz_min(a, z).min;
  report.a_centered_opnorm = operator_norm(a.weights() - sbm_expected_adjacency(z, p, q));

  const double rf = static_cast<double>(r);
  const double head = (rf + 11.0) / (rf - 3.0);
  const double tail = static_cast<double>(a.n()) * (p - q) / (rf - 1.0);
  report.rhs = variant == SbmCentering::kMeanEstimate
                   ? head * (2.0 * report.a_centered_opnorm + p) + tail
                   : head * report.a_centered_opnorm + tail;
  report.lhs = report.dz_min;
  report.margin = report.lhs - report.rhs;
  report.satisfied = report.margin >= 0.0;
  return report;
}

// sigma <= (r0-3)/(r0-1) sqrt(n / ((2+eps) log n)): the Gaussian-noise
// recovery threshold. Natural log; r0 = 3 gives 0.
inline double gaussian_sigma_threshold(Index n, int r0, double eps) {
  require(n >= 2, "gaussian_sigma_threshold: n >= 2");
  require(r0 >= 3, "gaussian_sigma_threshold: r0 >= 3");
  require(eps > 0.0, "gaussian_sigma_threshold: eps > 0");
  const double rf = static_cast<double>(r0);
  return (rf - 3.0) / (rf - 1.0) *
         std::sqrt(static_cast<double>(n) / ((2.0 + eps) * std::log(static_cast<double>(n))));
}

struct BernConditionResult {
  double value = 0.0;  // (np/log n) (1 - sqrt(1 - c^2 delta^2)), c = (r-3)/(r-1) - eps
  bool satisfied = false;         // value >= 1
  bool simple_satisfied = false;  // 1/delta <= (r-3)/(r-1) sqrt(np / ((2+eps) log n))
};

// Erdos-Renyi + Bernoulli-noise recovery condition, parameterized by
// a = np / log n.
inline BernConditionResult bern_condition(double np_over_logn, double delta, int r, double eps) {
  require(np_over_logn > 0.0, "bern_condition: np/log n must be positive");
  require(delta > 0.0 && delta <= 1.0, "bern_condition: delta in (0, 1]");
  require(r >= 4, "bern_condition: r >= 4");
  require(eps > 0.0 && eps <= 1.0 / 3.0, "bern_condition: eps in (0, 1/3]");
  const double rf = static_cast<double>(r);
  const double c = (rf - 3.0) / (rf - 1.0) - eps;
  require(c >= 0.0 && c <= 1.0, "bern_condition: (r-3)/(r-1) - eps must lie in [0, 1]");

  BernConditionResult out;
  out.value = np_over_logn * (1.0 - std::sqrt(1.0 - c * c * delta * delta));
  out.satisfied = out.value >= 1.0;
  out.simple_satisfied =
      1.0 / delta <= (rf - 3.0) / (rf - 1.0) * std::sqrt(np_over_logn / (2.0 + eps));
  return out;
}

struct SbmConditionResult {
  double value = 0.0;  // (n/log n) (sqrt(p - gamma) - sqrt(q + gamma))^2
  bool satisfied = false;  // value >= 2
  double gamma = 0.0;      // (1/(r-1) + eps)(p - q)
};

// Asymptotic SBM recovery condition; approaches the optimal threshold
// (sqrt p - sqrt q)^2 >= 2 log n / n as r grows and eps shrinks.
inline SbmConditionResult sbm_condition(Index n, double p, double q, int r, double eps) {
  require(n >= 2, "sbm_condition: n >= 2");
  require(q >= 0.0 && q < p && p <= 1.0, "sbm_condition: requires 0 <= q < p <= 1");
  require(r >= 4, "sbm_condition: r >= 4");
  require(eps > 0.0 && eps <= 1.0 / 12.0, "sbm_condition: eps in (0, 1/12]");

  SbmConditionResult out;
  out.gamma = (1.0 / (static_cast<double>(r) - 1.0) + eps) * (p - q);
  if (p - out.gamma < 0.0)
    throw std::invalid_argument(
        "sbm_condition: gamma exceeds (p-q)/2 regime, outside the condition's assumption");
  const double root = std::sqrt(p - out.gamma) - std::sqrt(q + out.gamma);
  out.value = static_cast<double>(n) / std::log(static_cast<double>(n)) * root * root;
  out.satisfied = out.value >= 2.0;
  return out;
}

}  // namespace z2sync
