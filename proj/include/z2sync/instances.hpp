#pragma once

#include "z2sync/rng.hpp"
#include "z2sync/types.hpp"

#include <cmath>
#include <optional>
#include <utility>

namespace z2sync {

// All generators fill the strict upper triangle row by row (i outer, j inner,
// i < j) and mirror; the diagonal stays zero. Each generator uses tagged
// substreams of its seed, so e.g. the graph draw of gen_er_bernoulli does not
// depend on delta. Tests re-derive these streams independently.

inline SignVector random_sign_vector(Index n, Rng& rng) {
  Eigen::VectorXi z(n);
  for (Index i = 0; i < n; ++i) z[i] = rng.sign();
  return SignVector(std::move(z));
}

// Uniformly random balanced sign vector (Fisher-Yates shuffle of an exact
// half-and-half assignment).
inline SignVector random_balanced_sign_vector(Index n, Rng& rng) {
  require(n >= 2 && n % 2 == 0, "balanced sign vector requires even n >= 2");
  Eigen::VectorXi z(n);
  for (Index i = 0; i < n; ++i) z[i] = i < n / 2 ? 1 : -1;
  for (Index i = n - 1; i > 0; --i) {
    const Index j = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(i) + 1));
    std::swap(z[i], z[j]);
  }
  return SignVector(std::move(z));
}

inline Graph complete_graph(Index n) {
  Matrix w = Matrix::Ones(n, n);
  w.diagonal().setZero();
  return Graph(std::move(w));
}

// C = z z^T + sigma W with W a symmetric standard Gaussian matrix (one normal
// draw per unordered pair), zero diagonal.
inline ProblemInstance gen_gaussian(Index n, double sigma, std::uint64_t seed) {
  require(n >= 2, "gen_gaussian: n must be >= 2");
  require(n <= kMaxDenseN, "gen_gaussian: n exceeds dense-storage limit 4096");
  require(std::isfinite(sigma) && sigma >= 0.0, "gen_gaussian: sigma must be >= 0");

  Rng truth_rng(derive_seed(seed, streams::kTruth));
  SignVector z = random_sign_vector(n, truth_rng);

  Rng noise_rng(derive_seed(seed, streams::kNoise));
  Matrix c = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      const double value = static_cast<double>(z[i] * z[j]) + sigma * noise_rng.normal();
      c(i, j) = value;
      c(j, i) = value;
    }

  return ProblemInstance{CostMatrix(std::move(c)), std::move(z), std::nullopt,
                         GaussianParams{n, sigma}, seed};
}

// Measurement graph G(n, p); on each edge the observed sign equals z_i z_j
// with probability (1 + delta)/2. Cost is zero off the edge set. The graph
// stream draws one uniform per pair; the noise stream one uniform per edge.
inline ProblemInstance gen_er_bernoulli(Index n, double p, double delta, std::uint64_t seed) {
  require(n >= 2, "gen_er_bernoulli: n must be >= 2");
  require(n <= kMaxDenseN, "gen_er_bernoulli: n exceeds dense-storage limit 4096");
  require(p >= 0.0 && p <= 1.0, "gen_er_bernoulli: p must be in [0, 1]");
  require(delta >= 0.0 && delta <= 1.0, "gen_er_bernoulli: delta must be in [0, 1]");

  Rng truth_rng(derive_seed(seed, streams::kTruth));
  SignVector z = random_sign_vector(n, truth_rng);

  Rng graph_rng(derive_seed(seed, streams::kGraph));
  Rng noise_rng(derive_seed(seed, streams::kNoise));
  Matrix a = Matrix::Zero(n, n);
  Matrix c = Matrix::Zero(n, n);
  const double correct_prob = (1.0 + delta) / 2.0;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      if (graph_rng.uniform() >= p) continue;
      a(i, j) = a(j, i) = 1.0;
      const int sign = noise_rng.uniform() < correct_prob ? 1 : -1;
      const double value = static_cast<double>(sign * z[i] * z[j]);
      c(i, j) = value;
      c(j, i) = value;
    }

  return ProblemInstance{CostMatrix(std::move(c)), std::move(z), Graph(std::move(a)),
                         ErBernoulliParams{n, p, delta}, seed};
}

// Centered SBM cost. MeanEstimate subtracts the empirical mean of all n^2
// entries; KnownPQ subtracts (p+q)/2. The diagonal is forced to zero either
// way (it never affects the landscape).
inline CostMatrix build_sbm_cost(const Graph& a, SbmCentering centering,
                                 std::optional<double> p = std::nullopt,
                                 std::optional<double> q = std::nullopt) {
  const Index n = a.n();
  double shift = 0.0;
  if (centering == SbmCentering::kMeanEstimate) {
    shift = a.weights().sum() / (static_cast<double>(n) * static_cast<double>(n));
  } else {
    require(p.has_value() && q.has_value(), "build_sbm_cost: KnownPQ centering needs p and q");
    shift = (*p + *q) / 2.0;
  }
  Matrix c = a.weights().array() - shift;
  c.diagonal().setZero();
  return CostMatrix(std::move(c));
}

// Balanced two-cluster stochastic block model: within-cluster edges with
// probability p, across with q < p; cost per build_sbm_cost.
inline ProblemInstance gen_sbm(Index n, double p, double q, SbmCentering centering,
                               std::uint64_t seed) {
  require(n >= 2 && n % 2 == 0, "gen_sbm: n must be even and >= 2");
  require(n <= kMaxDenseN, "gen_sbm: n exceeds dense-storage limit 4096");
  require(p >= 0.0 && p <= 1.0 && q >= 0.0 && q <= 1.0, "gen_sbm: probabilities in [0, 1]");
  require(q < p, "gen_sbm: requires q < p");

  Rng truth_rng(derive_seed(seed, streams::kTruth));
  SignVector z = random_balanced_sign_vector(n, truth_rng);

  Rng graph_rng(derive_seed(seed, streams::kGraph));
  Matrix a = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      const double prob = z[i] == z[j] ? p : q;
      if (graph_rng.uniform() < prob) a(i, j) = a(j, i) = 1.0;
    }

  Graph graph(std::move(a));
  CostMatrix cost = build_sbm_cost(graph, centering, p, q);
  return ProblemInstance{std::move(cost), std::move(z), std::move(graph),
                         SbmParams{n, p, q, centering}, seed};
}

// Monotone adversary: adds Delta+ with Delta+_ij z_i z_j >= 0 entrywise by
// construction. Pairs are included with probability `density`; included
// magnitudes are Uniform[0, strength]. Base instance metadata is kept.
inline ProblemInstance apply_monotone_adversary(const ProblemInstance& inst, double strength,
                                                double density, std::uint64_t seed) {
  require(inst.truth.has_value(), "apply_monotone_adversary: instance has no ground truth");
  require(std::isfinite(strength) && strength >= 0.0,
          "apply_monotone_adversary: strength must be >= 0");
  require(density >= 0.0 && density <= 1.0, "apply_monotone_adversary: density in [0, 1]");

  const Index n = inst.n();
  const SignVector& z = *inst.truth;
  Rng rng(derive_seed(seed, streams::kAdversary));
  Matrix c = inst.cost.entries();
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      if (rng.uniform() >= density) continue;
      const double bump = rng.uniform() * strength * static_cast<double>(z[i] * z[j]);
      c(i, j) += bump;
      c(j, i) = c(i, j);
    }

  return ProblemInstance{CostMatrix(std::move(c)), inst.truth, inst.graph, inst.params,
                         inst.seed};
}

// C = diag(z) A diag(z) + Delta, the general measurement model.
inline CostMatrix compose_z2_cost(const Graph& a, const NoiseMatrix& delta, const SignVector& z) {
  require(a.n() == delta.n() && a.n() == z.size(), "compose_z2_cost: dimension mismatch");
  const Index n = a.n();
  Matrix c(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      c(i, j) = a.weights()(i, j) * static_cast<double>(z[i] * z[j]) + delta.entries()(i, j);
  c.diagonal().setZero();
  return CostMatrix(std::move(c));
}

// Recovers Delta = C - diag(z) A diag(z) for models where the measurement
// graph is explicit (Gaussian instances use the complete graph). Not defined
// for SBM costs, whose centering uses a different decomposition.
inline NoiseMatrix implied_noise(const ProblemInstance& inst) {
  require(inst.truth.has_value(), "implied_noise: instance has no ground truth");
  require(!std::holds_alternative<SbmParams>(inst.params),
          "implied_noise: not defined for SBM cost centering");
  const Index n = inst.n();
  const SignVector& z = *inst.truth;
  Matrix a;
  if (inst.graph.has_value()) {
    a = inst.graph->weights();
  } else {
    a = Matrix::Ones(n, n);
    a.diagonal().setZero();
  }
  Matrix delta(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      delta(i, j) = inst.cost.entries()(i, j) - a(i, j) * static_cast<double>(z[i] * z[j]);
  delta.diagonal().setZero();
  return NoiseMatrix(std::move(delta));
}

}  // namespace z2sync
