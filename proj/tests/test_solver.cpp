#include "z2sync/certificates.hpp"
#include "z2sync/instances.hpp"
#include "z2sync/solver.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace z2sync;

namespace {

CostMatrix random_cost(Index n, Rng& rng) {
  Matrix m = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) m(i, j) = m(j, i) = rng.normal();
  return CostMatrix(std::move(m));
}

}  // namespace

TEST_CASE("zero cost converges immediately at the initial point") {
  const auto result = solve(CostMatrix::zero(12), 3, {}, 5);
  REQUIRE(result.status == SolveStatus::kConverged);
  REQUIRE(result.iterations == 0);
  REQUIRE(result.objective_value == 0.0);
  const auto start = random_point(12, 3, derive_seed(5, streams::kSolverInit));
  REQUIRE((result.point.matrix().array() == start.matrix().array()).all());
}

TEST_CASE("noiseless Gaussian instance recovers at r=3") {
  const auto inst = gen_gaussian(50, 0.0, 31);
  const auto result = solve(inst.cost, 3, {}, 77);
  REQUIRE(result.status == SolveStatus::kConverged);
  const auto recovery = check_exact_recovery(result.point, *inst.truth);
  REQUIRE(recovery.is_exact);
  REQUIRE(recovery.rel_residual <= 1e-6);
}

TEST_CASE("solver rejects invalid configs and ranks") {
  SolverConfig bad;
  bad.backtrack = 1.5;
  REQUIRE_THROWS_AS(solve(CostMatrix::zero(4), 2, bad, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(solve(CostMatrix::zero(4), 1, {}, 0), std::invalid_argument);
}

TEST_CASE("solve is bit-deterministic in (C, r, cfg, seed)") {
  Rng rng(404);
  const auto c = random_cost(25, rng);
  const auto a = solve(c, 5, {}, 999);
  const auto b = solve(c, 5, {}, 999);
  REQUIRE((a.point.matrix().array() == b.point.matrix().array()).all());
  REQUIRE(a.objective_value == b.objective_value);
  REQUIRE(a.iterations == b.iterations);
  REQUIRE(a.grad_residual == b.grad_residual);
}

TEST_CASE("accepted objective values are nondecreasing along the trace") {
  Rng rng(7);
  const auto c = random_cost(30, rng);
  SolverConfig cfg;
  cfg.record_trace = true;
  const auto result = solve(c, 4, cfg, 3);
  REQUIRE(result.trace.size() >= 2);
  for (std::size_t i = 1; i < result.trace.size(); ++i)
    REQUIRE(result.trace[i].objective >= result.trace[i - 1].objective);
}

TEST_CASE("iterates stay feasible and converged results meet their contract") {
  Rng rng(8);
  const auto c = random_cost(40, rng);
  const SolverConfig cfg;
  const auto result = solve(c, 6, cfg, 11);
  for (Index i = 0; i < 40; ++i)
    REQUIRE(std::abs(result.point.matrix().row(i).norm() - 1.0) <= kRowNormTol);
  if (result.status == SolveStatus::kConverged) {
    const double scale = 1.0 + operator_norm(c.entries());
    REQUIRE(result.grad_residual <= cfg.grad_tol);
    REQUIRE(result.min_curvature_estimate >= -cfg.curvature_tol * scale);
    // The reported (ledger) objective matches the returned point's objective
    // to terminal rounding.
    REQUIRE(std::abs(objective(c, result.point) - result.objective_value) <=
            1e-12 * (1.0 + std::abs(result.objective_value)));
  }
}

TEST_CASE("multi_start with one start equals solve") {
  Rng rng(9);
  const auto c = random_cost(15, rng);
  const auto multi = multi_start(c, 4, {}, 1, 321);
  const auto single = solve(c, 4, {}, derive_seed(321, streams::kStart, 0ull));
  REQUIRE(multi.best_index == 0);
  REQUIRE((multi.results[0].point.matrix().array() == single.point.matrix().array()).all());
}

TEST_CASE("multi_start seeds give bitwise-different initial points") {
  const auto p0 = random_point(20, 4, derive_seed(5, streams::kStart, 0ull));
  const auto p1 = random_point(20, 4, derive_seed(5, streams::kStart, 1ull));
  REQUIRE((p0.matrix().array() != p1.matrix().array()).any());
}

TEST_CASE("on a benign landscape all starts reach the same objective") {
  const auto inst = gen_gaussian(40, 0.3, 12);
  const auto multi = multi_start(inst.cost, 6, {}, 4, 777);
  for (const auto& result : multi.results)
    REQUIRE(result.status == SolveStatus::kConverged);
  const double best = multi.results[multi.best_index].objective_value;
  for (const auto& result : multi.results)
    REQUIRE(std::abs(result.objective_value - best) <= 1e-7 * std::abs(best));
}

TEST_CASE("certificate soundness against the enumeration oracle") {
  // Certified objective = SDP optimum >= brute force; equality exactly in
  // the tight (rank-1) case.
  Rng rng(2025);
  int certified = 0, tight = 0;
  for (int trial = 0; trial < 12; ++trial) {
    const auto c = random_cost(10, rng);
    const auto result = solve(c, 10, {}, derive_seed(1000, (std::uint64_t)trial));
    const auto cert = certify(c, result.point, 1e-8);
    if (!cert.is_global) continue;
    ++certified;
    const auto bf = brute_force_opt(c);
    REQUIRE(result.objective_value >= bf.value - 1e-8 * std::abs(bf.value));
    const auto recovery = check_exact_recovery(result.point, bf.argmax);
    if (recovery.rank1_gap <= 1e-6 * recovery.top_singular) {
      ++tight;
      REQUIRE(std::abs(result.objective_value - bf.value) <= 1e-8 * std::abs(bf.value));
    }
  }
  REQUIRE(certified >= 10);
}

TEST_CASE("solver certifies the planted optimum on sub-threshold sync instances") {
  int exact = 0;
  for (int trial = 0; trial < 8; ++trial) {
    const auto inst = gen_gaussian(30, 0.4, derive_seed(31337, (std::uint64_t)trial));
    const auto result = solve(inst.cost, 6, {}, derive_seed(11, (std::uint64_t)trial));
    REQUIRE(result.status == SolveStatus::kConverged);
    if (check_exact_recovery(result.point, *inst.truth).is_exact) ++exact;
  }
  REQUIRE(exact == 8);
}
