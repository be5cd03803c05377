#pragma once

#include "z2sync/manifold.hpp"
#include "z2sync/rng.hpp"
#include "z2sync/spectral.hpp"
#include "z2sync/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace z2sync {

struct SolverConfig {
  int max_iters = 10000;         // total accepted ascent steps across escapes
  double grad_tol = 1e-9;        // on ||S(Y)Y||_F / (1 + ||C||_op)
  double curvature_tol = 1e-8;   // on lambda_min(S(Y)) / (1 + ||C||_op)
  double escape_step = 1e-3;     // initial perturbation scale
  int max_escapes = 25;
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  bool record_trace = false;
};

enum class SolveStatus { kConverged, kMaxIters, kEscapeExhausted };

inline const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kConverged: return "converged";
    case SolveStatus::kMaxIters: return "max_iters";
    case SolveStatus::kEscapeExhausted: return "escape_exhausted";
  }
  return "unknown";
}

struct TraceEntry {
  int iteration = 0;
  double objective = 0.0;
  double grad_residual = 0.0;
  double step = 0.0;
  char event = 'a';  // 's' start, 'a' accepted ascent step, 'e' escape
};

struct SolveResult {
  FactorPoint point;
  SolveStatus status = SolveStatus::kMaxIters;
  int iterations = 0;
  double grad_residual = 0.0;            // ||S(Y)Y||_F / (1 + ||C||_op)
  double min_curvature_estimate = 0.0;   // lambda_min(S(Y)) estimate
  double objective_value = 0.0;
  int escapes = 0;
  std::vector<TraceEntry> trace;
};

namespace detail {

inline void validate_config(const SolverConfig& cfg) {
  require(cfg.max_iters > 0, "SolverConfig: max_iters must be positive");
  require(cfg.grad_tol > 0.0, "SolverConfig: grad_tol must be positive");
  require(cfg.curvature_tol > 0.0, "SolverConfig: curvature_tol must be positive");
  require(cfg.escape_step > 0.0, "SolverConfig: escape_step must be positive");
  require(cfg.max_escapes > 0, "SolverConfig: max_escapes must be positive");
  require(cfg.armijo_c > 0.0 && cfg.armijo_c < 1.0, "SolverConfig: armijo_c in (0, 1)");
  require(cfg.backtrack > 0.0 && cfg.backtrack < 1.0, "SolverConfig: backtrack in (0, 1)");
}

inline Matrix normalized_rows(Matrix m) {
  for (Index i = 0; i < m.rows(); ++i) {
    const double norm = m.row(i).norm();
    if (norm == 0.0) throw std::domain_error("retraction degenerated to a zero row");
    m.row(i) /= norm;
  }
  return m;
}

}  // namespace detail

// Riemannian gradient ascent with Armijo backtracking (Barzilai-Borwein
// initial steps) plus explicit negative-curvature escape along the smallest
// eigenvector of S(Y). Once objective improvements fall below floating-point
// resolution (which happens long before ||S(Y)Y|| reaches grad_tol on large
// instances), a terminal polish phase switches to fixed-step iterations
// accepted on residual decrease, which stays resolvable down to the machine
// floor. Reported objective values are a nondecreasing ledger; the objective
// at the returned point matches the ledger up to a few ulps of |objective|.
// Returns kConverged exactly when ||S(Y)Y||_F <= grad_tol (1 + ||C||_op) and
// lambda_min(S(Y)) >= -curvature_tol (1 + ||C||_op).
inline SolveResult solve(const CostMatrix& c, Index r, const SolverConfig& cfg,
                         std::uint64_t seed) {
  detail::validate_config(cfg);
  require(r >= 2, "solve: rank r must be >= 2");
  const Index n = c.n();
  const Matrix& cm = c.entries();

  const double scale = 1.0 + operator_norm(cm);
  const double grad_target = cfg.grad_tol * scale;
  const double curvature_target = -cfg.curvature_tol * scale;

  Rng init_rng(derive_seed(seed, streams::kSolverInit));
  Matrix y = random_point(n, r, init_rng).matrix();

  Matrix cy = cm * y;
  double objective_value = (cy.array() * y.array()).sum();
  require(std::isfinite(objective_value), "solve: non-finite objective (corrupted input)");

  Vector d = s_diagonal_from_product(cy, y);
  Matrix gradient = 2.0 * (cy - d.asDiagonal() * y);
  double sy_residual = 0.5 * gradient.norm();  // ||S(Y)Y||_F = ||grad||_F / 2

  SolveResult out{FactorPoint(detail::normalized_rows(y))};
  if (cfg.record_trace)
    out.trace.push_back({0, objective_value, sy_residual / scale, 0.0, 's'});

  double step = 1.0 / scale;           // warm-started trial step
  double escape_step = cfg.escape_step;
  double last_escape_objective = 0.0;
  bool escaped_before = false;
  Matrix prev_y, prev_gradient;
  bool have_prev = false;

  int iter = 0;
  while (true) {
    bool stalled = false;
    // Ascent until first-order stationarity or budget.
    while (sy_residual > grad_target && iter < cfg.max_iters && !stalled) {
      const double gnorm2 = gradient.squaredNorm();

      double trial = step;
      if (have_prev) {
        // BB1 step for the ascent direction: <s, s> / <s, g_old - g_new>.
        const double ss = (y - prev_y).squaredNorm();
        const double sg = ((y - prev_y).array() * (prev_gradient - gradient).array()).sum();
        if (sg > 0.0 && std::isfinite(ss / sg)) trial = ss / sg;
      }
      trial = std::clamp(trial, 1e-14 / scale, 1e8 / scale);

      bool accepted = false;
      Matrix y_new, cy_new;
      double obj_new = 0.0;
      for (int shrink = 0; shrink < 60; ++shrink) {
        bool degenerate = false;
        try {
          y_new = detail::normalized_rows(y + trial * gradient);
        } catch (const std::domain_error&) {
          degenerate = true;
        }
        if (!degenerate) {
          cy_new = cm * y_new;
          obj_new = (cy_new.array() * y_new.array()).sum();
          if (obj_new >= objective_value + cfg.armijo_c * trial * gnorm2) {
            accepted = true;
            break;
          }
        }
        trial *= cfg.backtrack;
      }
      if (!accepted) {
        // Even microscopic steps fail the sufficient-increase test: objective
        // comparisons are exhausted at this precision.
        stalled = true;
        break;
      }

      prev_y.swap(y);
      prev_gradient.swap(gradient);
      have_prev = true;
      y = std::move(y_new);
      cy = std::move(cy_new);
      objective_value = obj_new;
      require(std::isfinite(objective_value), "solve: non-finite objective during ascent");
      d = s_diagonal_from_product(cy, y);
      gradient = 2.0 * (cy - d.asDiagonal() * y);
      sy_residual = 0.5 * gradient.norm();
      step = trial / cfg.backtrack;  // warm start: try a slightly larger step next
      ++iter;
      if (cfg.record_trace)
        out.trace.push_back({iter, objective_value, sy_residual / scale, trial, 'a'});
    }

    if (stalled && sy_residual > grad_target && iter < cfg.max_iters) {
      // Terminal polish: fixed-step gradient iteration, tracking the
      // best-residual iterate. The ledger objective only ever increases.
      const double polish_step = 0.5 / scale;
      Matrix best_y = y;
      double best_residual = sy_residual;
      int patience = 0;
      while (iter < cfg.max_iters && patience < 80 && best_residual > 0.5 * grad_target) {
        bool degenerate = false;
        Matrix y_new;
        try {
          y_new = detail::normalized_rows(y + polish_step * gradient);
        } catch (const std::domain_error&) {
          degenerate = true;
        }
        if (degenerate) break;
        y = std::move(y_new);
        cy.noalias() = cm * y;
        const double obj_new = (cy.array() * y.array()).sum();
        require(std::isfinite(obj_new), "solve: non-finite objective during polish");
        objective_value = std::max(objective_value, obj_new);
        d = s_diagonal_from_product(cy, y);
        gradient = 2.0 * (cy - d.asDiagonal() * y);
        sy_residual = 0.5 * gradient.norm();
        ++iter;
        if (sy_residual < best_residual * (1.0 - 1e-6)) {
          best_residual = sy_residual;
          best_y = y;
          patience = 0;
        } else {
          ++patience;
        }
        if (cfg.record_trace)
          out.trace.push_back({iter, objective_value, sy_residual / scale, polish_step, 'p'});
      }
      if (sy_residual > best_residual) {
        y = std::move(best_y);
        cy.noalias() = cm * y;
        objective_value = std::max(objective_value, (cy.array() * y.array()).sum());
        d = s_diagonal_from_product(cy, y);
        gradient = 2.0 * (cy - d.asDiagonal() * y);
        sy_residual = 0.5 * gradient.norm();
      }
      have_prev = false;  // BB memory is stale after the polish
    }

    if (sy_residual > grad_target) {
      // Budget exhausted (or numerically stalled) before first-order
      // stationarity; still report a curvature estimate.
      Rng lanczos_rng(derive_seed(seed, streams::kLanczos, static_cast<std::uint64_t>(iter)));
      LanczosOptions options;
      options.scale = scale;
      auto apply = [&](const Vector& x) -> Vector { return d.cwiseProduct(x) - cm * x; };
      out.min_curvature_estimate = lanczos_extreme(apply, n, lanczos_rng, options).smallest.value;
      out.status = SolveStatus::kMaxIters;
      break;
    }

    // First-order point: estimate lambda_min(S(Y)) and its eigenvector.
    Rng lanczos_rng(
        derive_seed(seed, streams::kLanczos, static_cast<std::uint64_t>(out.escapes)));
    LanczosOptions options;
    options.scale = scale;
    auto apply = [&](const Vector& x) -> Vector { return d.cwiseProduct(x) - cm * x; };
    const auto spectrum = lanczos_extreme(apply, n, lanczos_rng, options);
    out.min_curvature_estimate = spectrum.smallest.value;

    if (spectrum.smallest.value >= curvature_target) {
      out.status = SolveStatus::kConverged;
      break;
    }
    if (out.escapes >= cfg.max_escapes) {
      out.status = SolveStatus::kEscapeExhausted;
      break;
    }
    if (iter >= cfg.max_iters) {
      out.status = SolveStatus::kMaxIters;
      break;
    }

    // Escape along the tangent projection of the offending eigenvector,
    // doubling the perturbation scale on repeated failure at the same value.
    if (escaped_before &&
        std::abs(objective_value - last_escape_objective) <= 1e-12 * (1.0 + std::abs(objective_value)))
      escape_step = std::min(escape_step * 2.0, 1.0);
    else
      escape_step = cfg.escape_step;
    last_escape_objective = objective_value;
    escaped_before = true;
    ++out.escapes;

    Rng dir_rng(derive_seed(seed, streams::kEscapeDir, static_cast<std::uint64_t>(out.escapes)));
    Eigen::RowVectorXd spread(r);
    for (Index j = 0; j < r; ++j) spread[j] = dir_rng.normal();
    spread /= spread.norm();
    Matrix direction = project_tangent_raw(y, spectrum.smallest.vector * spread);
    if (direction.norm() < 1e-12) {
      Matrix ambient(n, r);
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < r; ++j) ambient(i, j) = dir_rng.normal();
      direction = project_tangent_raw(y, ambient);
    }
    const double dir_norm = direction.norm();
    if (dir_norm < 1e-12) {
      out.status = SolveStatus::kEscapeExhausted;
      break;
    }
    direction /= dir_norm;

    // Keep accepted objectives nondecreasing: shrink the kick until the
    // objective does not drop below its value at the current point (negative
    // curvature of S means the objective gains at second order along this
    // direction). The comparison anchor is recomputed locally because the
    // ledger can sit a few ulps above the current point after a polish.
    const double anchor = (cy.array() * y.array()).sum();
    double kick = escape_step;
    bool moved = false;
    for (int shrink = 0; shrink < 48; ++shrink) {
      bool degenerate = false;
      Matrix y_try;
      try {
        y_try = detail::normalized_rows(y + kick * direction);
      } catch (const std::domain_error&) {
        degenerate = true;
      }
      if (!degenerate) {
        Matrix cy_try = cm * y_try;
        const double obj_try = (cy_try.array() * y_try.array()).sum();
        if (obj_try >= anchor) {
          y = std::move(y_try);
          cy = std::move(cy_try);
          objective_value = std::max(objective_value, obj_try);
          moved = true;
          break;
        }
      }
      kick *= cfg.backtrack;
    }
    if (moved) {
      have_prev = false;  // BB memory is stale across an escape
      d = s_diagonal_from_product(cy, y);
      gradient = 2.0 * (cy - d.asDiagonal() * y);
      sy_residual = 0.5 * gradient.norm();
      ++iter;
      if (cfg.record_trace)
        out.trace.push_back({iter, objective_value, sy_residual / scale, kick, 'e'});
    }
    // If the escape found no admissible kick, loop again: the doubling rule
    // above raises escape_step and the direction seed changes with escapes.
  }

  out.point = FactorPoint(std::move(y));
  out.iterations = iter;
  out.grad_residual = sy_residual / scale;
  out.objective_value = objective_value;
  return out;
}

struct MultiStartResult {
  std::vector<SolveResult> results;
  std::size_t best_index = 0;
};

// Runs `starts` independent solves with seeds derived from (seed, index).
// Best index: highest objective among certified (converged) starts, falling
// back to highest objective overall; ties keep the lowest index.
inline MultiStartResult multi_start(const CostMatrix& c, Index r, const SolverConfig& cfg,
                                    int starts, std::uint64_t seed) {
  require(starts >= 1, "multi_start: starts must be >= 1");
  MultiStartResult out;
  out.results.reserve(static_cast<std::size_t>(starts));
  for (int s = 0; s < starts; ++s)
    out.results.push_back(
        solve(c, r, cfg, derive_seed(seed, streams::kStart, static_cast<std::uint64_t>(s))));

  auto better = [](const SolveResult& a, const SolveResult& b) {
    const bool ca = a.status == SolveStatus::kConverged;
    const bool cb = b.status == SolveStatus::kConverged;
    if (ca != cb) return ca;
    return a.objective_value > b.objective_value;
  };
  std::size_t best = 0;
  for (std::size_t i = 1; i < out.results.size(); ++i)
    if (better(out.results[i], out.results[best])) best = i;
  out.best_index = best;
  return out;
}

}  // namespace z2sync
