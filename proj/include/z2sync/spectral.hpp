#pragma once

#include "z2sync/rng.hpp"
#include "z2sync/types.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace z2sync {

struct LanczosOptions {
  // <= 0 means min(5n, n); full reorthogonalization makes iterations past n
  // meaningless (the Krylov basis is exhausted).
  int max_iterations = 0;
  double tolerance = 1e-10;
  // Residuals are compared against tolerance * max(scale, spectral spread).
  double scale = 1.0;
  // Optional projector onto an invariant subspace. Applied to the start
  // vector and to every new Krylov vector: reorthogonalization alone cannot
  // remove drift toward deflated directions outside the basis span (the
  // drift amplifies whenever beta_k gets small).
  std::function<void(Vector&)> subspace_projector;
};

struct RitzPair {
  double value = 0.0;
  Vector vector;
  double residual = 0.0;
};

struct LanczosResult {
  RitzPair smallest;
  RitzPair largest;
  int iterations = 0;
  bool converged = false;
};

// Lanczos iteration with full (twice-applied) reorthogonalization for a
// symmetric operator given as a matrix-vector product. Tracks both extreme
// Ritz pairs; converged when both residual estimates |beta_k s_k| fall below
// tolerance * working scale. The tridiagonal eigenproblem is re-solved every
// few steps from its diagonals, which keeps the per-check cost O(k^2).
// `start` (when given) seeds the Krylov space; callers working on a deflated
// invariant subspace must pass a start vector inside that subspace.
template <class Apply>
LanczosResult lanczos_extreme(Apply&& apply, Index n, Rng& rng, const LanczosOptions& options,
                              const Vector* start = nullptr) {
  LanczosResult out;
  require(n >= 1, "lanczos: empty operator");

  const int cap = options.max_iterations > 0
                      ? std::min<int>(options.max_iterations, static_cast<int>(n))
                      : static_cast<int>(std::min<Index>(5 * n, n));

  std::vector<Vector> basis;
  basis.reserve(static_cast<std::size_t>(cap) + 1);
  std::vector<double> alpha, beta;

  Vector v(n);
  if (start != nullptr && start->size() == n && start->norm() > 0.0) {
    v = *start;
  } else {
    for (Index i = 0; i < n; ++i) v[i] = rng.normal();
  }
  if (options.subspace_projector) options.subspace_projector(v);
  double vnorm = v.norm();
  if (vnorm == 0.0) {
    v.setZero();
    v[0] = 1.0;
    vnorm = 1.0;
  }
  v /= vnorm;
  basis.push_back(v);

  const int check_every = 8;
  Eigen::SelfAdjointEigenSolver<Matrix> tri_solver;

  auto finalize = [&](bool need_vectors) {
    const int k = static_cast<int>(alpha.size());
    if (k == 0) {
      out.smallest = {0.0, basis[0], 0.0};
      out.largest = {0.0, basis[0], 0.0};
      out.converged = true;
      return;
    }
    Vector diag = Eigen::Map<const Vector>(alpha.data(), k);
    Vector sub = k > 1 ? Eigen::Map<const Vector>(beta.data(), k - 1) : Vector();
    tri_solver.computeFromTridiagonal(diag, sub,
                                      need_vectors ? Eigen::ComputeEigenvectors
                                                   : Eigen::EigenvaluesOnly);
    const Vector& theta = tri_solver.eigenvalues();
    const double beta_last = beta.size() >= static_cast<std::size_t>(k) ? beta[k - 1] : 0.0;
    auto make_pair = [&](int idx) {
      RitzPair pair;
      pair.value = theta[idx];
      if (need_vectors) {
        const Vector s = tri_solver.eigenvectors().col(idx);
        pair.residual = std::abs(beta_last * s[k - 1]);
        pair.vector = Vector::Zero(n);
        for (int j = 0; j < k; ++j) pair.vector += s[j] * basis[static_cast<std::size_t>(j)];
        const double norm = pair.vector.norm();
        if (norm > 0.0) pair.vector /= norm;
      }
      return pair;
    };
    out.smallest = make_pair(0);
    out.largest = make_pair(k - 1);
  };

  double prev_small = 0.0, prev_large = 0.0;
  bool have_prev = false;

  for (int k = 0; k < cap; ++k) {
    Vector w = apply(basis.back());
    require(w.size() == n, "lanczos: operator changed dimension");
    const double a = basis.back().dot(w);
    alpha.push_back(a);
    w -= a * basis.back();
    if (k > 0) w -= beta[static_cast<std::size_t>(k - 1)] * basis[static_cast<std::size_t>(k - 1)];
    if (options.subspace_projector) options.subspace_projector(w);
    // Reorthogonalize twice against the whole basis.
    for (int pass = 0; pass < 2; ++pass)
      for (const Vector& q : basis) w -= q.dot(w) * q;

    const double b = w.norm();
    out.iterations = k + 1;

    if (b <= 1e-14 * std::max(1.0, std::abs(a))) {
      // Invariant subspace: the tridiagonal problem is exact.
      finalize(true);
      out.converged = true;
      return out;
    }

    beta.push_back(b);
    basis.push_back(w / b);

    const bool last = (k + 1 == cap);
    if ((k + 1) % check_every == 0 || last) {
      const int kk = static_cast<int>(alpha.size());
      Vector diag = Eigen::Map<const Vector>(alpha.data(), kk);
      Vector sub = kk > 1 ? Eigen::Map<const Vector>(beta.data(), kk - 1) : Vector();
      tri_solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
      const double small = tri_solver.eigenvalues()[0];
      const double large = tri_solver.eigenvalues()[kk - 1];
      const double working_scale =
          std::max({options.scale, std::abs(small), std::abs(large)});
      const double tol = options.tolerance * working_scale;
      if (have_prev && std::abs(small - prev_small) <= tol &&
          std::abs(large - prev_large) <= tol) {
        finalize(true);
        if (out.smallest.residual <= 50.0 * tol && out.largest.residual <= 50.0 * tol) {
          out.converged = true;
          return out;
        }
        // Ritz values stabilized but residuals disagree; keep iterating.
      }
      prev_small = small;
      prev_large = large;
      have_prev = true;
    }
  }
  finalize(true);
  const double working_scale =
      std::max({options.scale, std::abs(out.smallest.value), std::abs(out.largest.value)});
  out.converged = std::max(out.smallest.residual, out.largest.residual) <=
                  50.0 * options.tolerance * working_scale;
  return out;
}

// Largest absolute eigenvalue of a symmetric matrix (its operator norm).
// Relative tolerance 1e-10 against the running spectral estimates.
inline double operator_norm(const Matrix& m) {
  require(m.rows() == m.cols() && m.rows() >= 1, "operator_norm: not square");
  require(is_exactly_symmetric(m), "operator_norm: asymmetric input");
  const Index n = m.rows();
  Rng rng(derive_seed(0xa11ce5u, streams::kSpectral, static_cast<std::uint64_t>(n)));
  LanczosOptions options;
  options.scale = 1e-300;
  auto result = lanczos_extreme([&](const Vector& x) -> Vector { return m * x; }, n, rng, options);
  return std::max(std::abs(result.smallest.value), std::abs(result.largest.value));
}

namespace detail {

// Smallest eigenvalue of the Laplacian restricted to span{1}^perp; 1 is in
// the null space of every Laplacian, so Lanczos deflated onto that subspace
// exposes lambda_2 as the smallest Ritz value.
inline double lambda2_iterative(const Matrix& laplacian) {
  const Index n = laplacian.rows();
  Rng rng(derive_seed(0x1a91acu, streams::kSpectral, static_cast<std::uint64_t>(n)));
  LanczosOptions options;
  options.scale = 1e-300;
  options.subspace_projector = [n](Vector& x) {
    x.array() -= x.sum() / static_cast<double>(n);
  };
  auto result = lanczos_extreme(
      [&](const Vector& x) -> Vector { return laplacian * x; }, n, rng, options);
  return result.smallest.value;
}

}  // namespace detail

// Threshold below which symmetric eigenproblems go through Eigen's dense
// solver; above it the Lanczos path is used. Tests cross-validate the two.
inline constexpr Index kDenseEigCutoff = 1024;

}  // namespace z2sync
