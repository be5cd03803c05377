#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

namespace z2sync {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Largest n the dense-storage code paths accept. Generation refuses above.
inline constexpr Index kMaxDenseN = 4096;

inline void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

inline bool is_exactly_symmetric(const Matrix& m) {
  if (m.rows() != m.cols()) return false;
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = j + 1; i < m.rows(); ++i)
      if (m(i, j) != m(j, i)) return false;
  return true;
}

inline bool has_zero_diagonal(const Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i)
    if (m(i, i) != 0.0) return false;
  return true;
}

// Vector in {±1}^n. Ground truth z and recovered labels.
class SignVector {
 public:
  explicit SignVector(Eigen::VectorXi entries) : entries_(std::move(entries)) {
    require(entries_.size() >= 1, "SignVector: empty");
    for (Index i = 0; i < entries_.size(); ++i)
      require(entries_[i] == 1 || entries_[i] == -1, "SignVector: entry not in {+1, -1}");
  }

  static SignVector constant(Index n, int s) {
    return SignVector(Eigen::VectorXi::Constant(n, s));
  }

  Index size() const { return entries_.size(); }
  int operator[](Index i) const { return entries_[i]; }
  const Eigen::VectorXi& entries() const { return entries_; }
  Vector as_reals() const { return entries_.cast<double>(); }

  // Balanced means the two sign classes have equal size (requires even n).
  bool is_balanced() const { return entries_.sum() == 0; }

  SignVector flipped() const { return SignVector(-entries_); }

  friend bool operator==(const SignVector& a, const SignVector& b) {
    return a.entries_.size() == b.entries_.size() && (a.entries_.array() == b.entries_.array()).all();
  }

 private:
  Eigen::VectorXi entries_;
};

// Symmetric nonnegative weights, zero diagonal: the measurement graph A.
class Graph {
 public:
  explicit Graph(Matrix weights) : weights_(std::move(weights)) {
    require(weights_.rows() == weights_.cols() && weights_.rows() >= 1, "Graph: not square");
    require(weights_.allFinite(), "Graph: non-finite weight");
    require(is_exactly_symmetric(weights_), "Graph: asymmetric weights");
    require(has_zero_diagonal(weights_), "Graph: nonzero diagonal");
    require((weights_.array() >= 0.0).all(), "Graph: negative weight");
  }

  Index n() const { return weights_.rows(); }
  const Matrix& weights() const { return weights_; }
  Vector degrees() const { return weights_.rowwise().sum(); }

  Matrix laplacian() const {
    Matrix l = -weights_;
    l.diagonal() = degrees();
    return l;
  }

 private:
  Matrix weights_;
};

// Symmetric noise Δ, zero diagonal. Entries may have either sign.
class NoiseMatrix {
 public:
  explicit NoiseMatrix(Matrix entries) : entries_(std::move(entries)) {
    require(entries_.rows() == entries_.cols() && entries_.rows() >= 1, "NoiseMatrix: not square");
    require(entries_.allFinite(), "NoiseMatrix: non-finite entry");
    require(is_exactly_symmetric(entries_), "NoiseMatrix: asymmetric");
    require(has_zero_diagonal(entries_), "NoiseMatrix: nonzero diagonal");
  }

  static NoiseMatrix zero(Index n) { return NoiseMatrix(Matrix::Zero(n, n)); }

  Index n() const { return entries_.rows(); }
  const Matrix& entries() const { return entries_; }
  bool is_zero() const { return (entries_.array() == 0.0).all(); }

 private:
  Matrix entries_;
};

// Symmetric cost matrix C with zero diagonal (the diagonal never affects the
// landscape, so it is stored as zero everywhere).
class CostMatrix {
 public:
  explicit CostMatrix(Matrix entries) : entries_(std::move(entries)) {
    require(entries_.rows() == entries_.cols() && entries_.rows() >= 1, "CostMatrix: not square");
    require(entries_.allFinite(), "CostMatrix: non-finite entry");
    require(is_exactly_symmetric(entries_), "CostMatrix: asymmetric");
    require(has_zero_diagonal(entries_), "CostMatrix: nonzero diagonal");
  }

  static CostMatrix zero(Index n) { return CostMatrix(Matrix::Zero(n, n)); }

  Index n() const { return entries_.rows(); }
  const Matrix& entries() const { return entries_; }

 private:
  Matrix entries_;
};

enum class SbmCentering { kMeanEstimate, kKnownPQ };

struct GaussianParams {
  Index n = 0;
  double sigma = 0.0;
};

struct ErBernoulliParams {
  Index n = 0;
  double p = 0.0;
  double delta = 0.0;
};

struct SbmParams {
  Index n = 0;
  double p = 0.0;
  double q = 0.0;
  SbmCentering centering = SbmCentering::kMeanEstimate;
};

struct RawParams {
  Index n = 0;
};

using ModelParams = std::variant<GaussianParams, ErBernoulliParams, SbmParams, RawParams>;

inline Index params_n(const ModelParams& params) {
  return std::visit([](const auto& p) { return p.n; }, params);
}

struct ProblemInstance {
  CostMatrix cost;
  std::optional<SignVector> truth;
  std::optional<Graph> graph;
  ModelParams params;
  std::uint64_t seed = 0;

  Index n() const { return cost.n(); }
};

}  // namespace z2sync
