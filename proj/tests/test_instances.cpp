#include "z2sync/instances.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace z2sync;

namespace {

bool bitwise_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

}  // namespace

TEST_CASE("gen_gaussian noiseless cost is exactly z z^T off the diagonal") {
  for (std::uint64_t seed : {0ull, 1ull, 17ull}) {
    const auto inst = gen_gaussian(5, 0.0, seed);
    const auto& z = *inst.truth;
    for (Index i = 0; i < 5; ++i)
      for (Index j = 0; j < 5; ++j)
        REQUIRE(inst.cost.entries()(i, j) ==
                (i == j ? 0.0 : static_cast<double>(z[i] * z[j])));
  }
}

TEST_CASE("gen_gaussian n=2 with opposite signs gives [[0,-1],[-1,0]]") {
  bool found = false;
  for (std::uint64_t seed = 0; seed < 64 && !found; ++seed) {
    const auto inst = gen_gaussian(2, 0.0, seed);
    if ((*inst.truth)[0] != (*inst.truth)[1]) {
      found = true;
      REQUIRE(inst.cost.entries()(0, 1) == -1.0);
      REQUIRE(inst.cost.entries()(1, 0) == -1.0);
      REQUIRE(inst.cost.entries()(0, 0) == 0.0);
    }
  }
  REQUIRE(found);
}

TEST_CASE("gen_gaussian matches an independent re-derivation of its streams") {
  const std::uint64_t seed = 4242;
  const Index n = 30;
  const double sigma = 1.7;
  const auto inst = gen_gaussian(n, sigma, seed);

  Rng truth_rng(derive_seed(seed, streams::kTruth));
  for (Index i = 0; i < n; ++i) REQUIRE((*inst.truth)[i] == truth_rng.sign());

  Rng noise_rng(derive_seed(seed, streams::kNoise));
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      const double expected = static_cast<double>((*inst.truth)[i] * (*inst.truth)[j]) +
                              sigma * noise_rng.normal();
      REQUIRE(inst.cost.entries()(i, j) == expected);
    }
}

TEST_CASE("gen_gaussian noise has the right empirical mean") {
  const Index n = 100;
  const double sigma = 1.0;
  const auto inst = gen_gaussian(n, sigma, 7);
  const auto& z = *inst.truth;
  double sum = 0.0;
  const double pairs = static_cast<double>(n * (n - 1)) / 2.0;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      sum += inst.cost.entries()(i, j) - static_cast<double>(z[i] * z[j]);
  REQUIRE(std::abs(sum / pairs) <= 3.0 * std::sqrt(2.0) * sigma / std::sqrt(pairs));
}

TEST_CASE("gen_gaussian rejects bad arguments") {
  REQUIRE_THROWS_AS(gen_gaussian(1, 1.0, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(gen_gaussian(5000, 1.0, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(gen_gaussian(10, -0.5, 0), std::invalid_argument);
}

TEST_CASE("gen_er_bernoulli with delta=1 gives cost = diag(z) A diag(z) exactly") {
  const auto inst = gen_er_bernoulli(40, 0.4, 1.0, 3);
  const auto& z = *inst.truth;
  const auto& a = inst.graph->weights();
  for (Index i = 0; i < 40; ++i)
    for (Index j = 0; j < 40; ++j)
      REQUIRE(inst.cost.entries()(i, j) == a(i, j) * static_cast<double>(z[i] * z[j]));
}

TEST_CASE("gen_er_bernoulli with p=0 gives the zero cost matrix") {
  const auto inst = gen_er_bernoulli(20, 0.0, 0.5, 5);
  REQUIRE((inst.cost.entries().array() == 0.0).all());
  REQUIRE((inst.graph->weights().array() == 0.0).all());
}

TEST_CASE("gen_er_bernoulli edge-sign fraction is binomially consistent") {
  const Index n = 2000;
  const double p = 0.5, delta = 0.6;
  const auto inst = gen_er_bernoulli(n, p, delta, 11);
  const auto& z = *inst.truth;
  long long edges = 0, correct = 0;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      if (inst.graph->weights()(i, j) == 0.0) continue;
      ++edges;
      if (inst.cost.entries()(i, j) == static_cast<double>(z[i] * z[j])) ++correct;
    }
  const double target = (1.0 + delta) / 2.0;
  const double fraction = static_cast<double>(correct) / static_cast<double>(edges);
  REQUIRE(std::abs(fraction - target) <=
          3.0 * std::sqrt(target * (1.0 - target) / static_cast<double>(edges)));
}

TEST_CASE("gen_sbm p=1 q=0 yields two complete clusters") {
  const auto inst = gen_sbm(12, 1.0, 0.0, SbmCentering::kKnownPQ, 9);
  const auto& z = *inst.truth;
  REQUIRE(z.is_balanced());
  for (Index i = 0; i < 12; ++i)
    for (Index j = 0; j < 12; ++j) {
      const double expected = (i != j && z[i] == z[j]) ? 1.0 : 0.0;
      REQUIRE(inst.graph->weights()(i, j) == expected);
    }
}

TEST_CASE("gen_sbm rejects q >= p and odd n") {
  REQUIRE_THROWS_AS(gen_sbm(10, 0.3, 0.3, SbmCentering::kMeanEstimate, 0),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(gen_sbm(10, 0.2, 0.5, SbmCentering::kMeanEstimate, 0),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(gen_sbm(11, 0.5, 0.2, SbmCentering::kMeanEstimate, 0),
                    std::invalid_argument);
}

TEST_CASE("gen_sbm within-cluster edge density is binomially consistent") {
  const Index n = 800;
  const double p = 0.2, q = 0.05;
  const auto inst = gen_sbm(n, p, q, SbmCentering::kMeanEstimate, 21);
  const auto& z = *inst.truth;
  long long pairs = 0, edges = 0;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      if (z[i] != z[j]) continue;
      ++pairs;
      if (inst.graph->weights()(i, j) == 1.0) ++edges;
    }
  const double density = static_cast<double>(edges) / static_cast<double>(pairs);
  REQUIRE(std::abs(density - p) <=
          3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(pairs)));
}

TEST_CASE("build_sbm_cost mean-estimate centering") {
  const Index n = 8;
  SECTION("zero graph gives zero cost") {
    const Graph a(Matrix::Zero(n, n));
    const auto cost = build_sbm_cost(a, SbmCentering::kMeanEstimate);
    REQUIRE((cost.entries().array() == 0.0).all());
  }
  SECTION("complete graph gives constant off-diagonal") {
    const auto cost = build_sbm_cost(complete_graph(n), SbmCentering::kMeanEstimate);
    const double expected =
        1.0 - static_cast<double>(n * n - n) / static_cast<double>(n * n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        REQUIRE(cost.entries()(i, j) == (i == j ? 0.0 : expected));
  }
}

TEST_CASE("build_sbm_cost known-pq centering subtracts (p+q)/2 off-diagonal") {
  const auto inst = gen_sbm(16, 0.7, 0.2, SbmCentering::kMeanEstimate, 2);
  const auto cost = build_sbm_cost(*inst.graph, SbmCentering::kKnownPQ, 0.7, 0.2);
  const double shift = (0.7 + 0.2) / 2.0;
  for (Index i = 0; i < 16; ++i)
    for (Index j = 0; j < 16; ++j) {
      const double expected = i == j ? 0.0 : inst.graph->weights()(i, j) - shift;
      REQUIRE(cost.entries()(i, j) == expected);
    }
  REQUIRE_THROWS_AS(build_sbm_cost(*inst.graph, SbmCentering::kKnownPQ),
                    std::invalid_argument);
}

TEST_CASE("known-pq SBM cost is centered around (p-q)/2 zz^T") {
  // E C = (p-q)/2 zz^T - p I, so off-diagonal means over seeds vanish.
  const Index n = 60;
  const double p = 0.6, q = 0.2;
  const int seeds = 400;
  Matrix acc = Matrix::Zero(n, n);
  for (int s = 0; s < seeds; ++s) {
    const auto inst = gen_sbm(n, p, q, SbmCentering::kKnownPQ, 1000 + s);
    const Vector zr = inst.truth->as_reals();
    acc += inst.cost.entries() - 0.5 * (p - q) * (zr * zr.transpose());
  }
  acc /= static_cast<double>(seeds);
  acc.diagonal().setZero();
  REQUIRE(acc.cwiseAbs().maxCoeff() <= 5.0 * 0.5 / std::sqrt(static_cast<double>(seeds)));
}

TEST_CASE("generated matrices are exactly symmetric with zero diagonal") {
  const auto g1 = gen_gaussian(31, 2.0, 13);
  const auto g2 = gen_er_bernoulli(33, 0.5, 0.7, 14);
  const auto g3 = gen_sbm(34, 0.6, 0.1, SbmCentering::kMeanEstimate, 15);
  for (const auto* inst : {&g1, &g2, &g3}) {
    REQUIRE(is_exactly_symmetric(inst->cost.entries()));
    REQUIRE(has_zero_diagonal(inst->cost.entries()));
    if (inst->graph) {
      REQUIRE(is_exactly_symmetric(inst->graph->weights()));
      REQUIRE(has_zero_diagonal(inst->graph->weights()));
    }
  }
}

TEST_CASE("identical seeds give bit-identical instances") {
  const auto a = gen_sbm(24, 0.5, 0.1, SbmCentering::kMeanEstimate, 77);
  const auto b = gen_sbm(24, 0.5, 0.1, SbmCentering::kMeanEstimate, 77);
  REQUIRE(bitwise_equal(a.cost.entries(), b.cost.entries()));
  REQUIRE(bitwise_equal(a.graph->weights(), b.graph->weights()));
  REQUIRE(*a.truth == *b.truth);
  const auto c = gen_sbm(24, 0.5, 0.1, SbmCentering::kMeanEstimate, 78);
  REQUIRE(!bitwise_equal(a.cost.entries(), c.cost.entries()));
}

TEST_CASE("monotone adversary keeps the sign condition entrywise") {
  const auto inst = gen_gaussian(30, 1.0, 5);
  const auto bumped = apply_monotone_adversary(inst, 2.0, 0.5, 123);
  const auto& z = *inst.truth;
  const Matrix delta_plus = bumped.cost.entries() - inst.cost.entries();
  REQUIRE(is_exactly_symmetric(delta_plus));
  REQUIRE(has_zero_diagonal(delta_plus));
  double min_signed = 0.0;
  bool any = false;
  for (Index i = 0; i < 30; ++i)
    for (Index j = i + 1; j < 30; ++j) {
      const double signed_value = delta_plus(i, j) * static_cast<double>(z[i] * z[j]);
      min_signed = any ? std::min(min_signed, signed_value) : signed_value;
      any = true;
      if (delta_plus(i, j) != 0.0) REQUIRE(signed_value > 0.0);
    }
  REQUIRE(any);
  REQUIRE(min_signed >= 0.0);
}

TEST_CASE("monotone adversary with strength zero leaves the cost unchanged") {
  const auto inst = gen_er_bernoulli(25, 0.5, 0.8, 6);
  const auto bumped = apply_monotone_adversary(inst, 0.0, 1.0, 9);
  REQUIRE(bitwise_equal(bumped.cost.entries(), inst.cost.entries()));
}

TEST_CASE("monotone adversary requires ground truth") {
  ProblemInstance raw{CostMatrix::zero(4), std::nullopt, std::nullopt, RawParams{4}, 0};
  REQUIRE_THROWS_AS(apply_monotone_adversary(raw, 1.0, 0.5, 0), std::invalid_argument);
}

TEST_CASE("scaled rank-1 bump is a valid monotone perturbation") {
  // Delta+ = c (zz^T - ddiag(zz^T)) has Delta+_ij z_i z_j = c >= 0.
  const auto inst = gen_gaussian(12, 0.5, 3);
  const Vector zr = inst.truth->as_reals();
  Matrix bump = 0.7 * (zr * zr.transpose());
  bump.diagonal().setZero();
  for (Index i = 0; i < 12; ++i)
    for (Index j = 0; j < 12; ++j)
      if (i != j) REQUIRE(bump(i, j) * zr[i] * zr[j] >= 0.0);
  const CostMatrix perturbed(inst.cost.entries() + bump);
  REQUIRE(is_exactly_symmetric(perturbed.entries()));
}

TEST_CASE("compose and implied noise round-trip the measurement model") {
  const auto inst = gen_er_bernoulli(20, 0.6, 0.7, 8);
  const auto delta = implied_noise(inst);
  const auto recomposed = compose_z2_cost(*inst.graph, delta, *inst.truth);
  REQUIRE(bitwise_equal(recomposed.entries(), inst.cost.entries()));
}
