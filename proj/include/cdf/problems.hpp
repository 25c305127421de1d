#pragma once

// Objective oracles and the built-in benchmark family.
//
// An oracle bundle describes f = phi + gamma * r where phi is locally
// Lipschitz (possibly nonsmooth) and r is an optional convex, prox-friendly
// regularizer. Subgradient oracles return a single element of the Clarke
// subdifferential (or of a conservative field, for the ReLU network).
// Oracles hold no mutable state; randomness is supplied by the caller.

#include "cdf/types.hpp"

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cdf {

using ProblemValue = std::function<double(const Matrix&)>;
using ProblemSubgrad = std::function<Matrix(const Matrix&, Rng&)>;

/// gamma * r, with r convex.
struct Regularizer {
  std::string name;
  /// Unweighted r(X).
  std::function<double(const Matrix&)> r_value;
  /// prox of tau * gamma * r evaluated at X.
  std::function<Matrix(const Matrix&, double tau)> prox;
  /// Given the smooth-part subgradient G at X, returns the minimum-norm
  /// element of G + gamma * dr(X).
  std::function<Matrix(const Matrix& x, const Matrix& g)> combine_subgradient;
  /// Lipschitz constant of gamma * r w.r.t. the Frobenius norm.
  double lipschitz = 0.0;
  double gamma = 0.0;

  double value(const Matrix& x) const { return gamma * r_value(x); }
};

/// gamma * ||X||_1 on n x p matrices.
Regularizer make_l1_regularizer(double gamma, Eigen::Index n, Eigen::Index p);

/// Componentwise soft threshold sign(x) max(|x| - threshold, 0).
Matrix soft_threshold(const Matrix& x, double threshold);

struct NoiseModel {
  double sigma = 0.0;
  /// Frobenius truncation radius; 0 selects the default 10 * sigma.
  double bound = 0.0;
  std::uint64_t seed = 0;

  double effective_bound() const { return bound > 0.0 ? bound : 10.0 * sigma; }
};

/// One zero-mean noise draw: a Gaussian matrix radially clipped to
/// ||xi||_F <= bound. The clip is odd in xi, so the mean stays zero.
Matrix draw_noise(const NoiseModel& model, Eigen::Index rows,
                  Eigen::Index cols, Rng& rng);

struct ProblemDefinition {
  std::string name;
  Eigen::Index n = 0;
  Eigen::Index p = 0;
  ProblemValue phi_value;
  /// Possibly stochastic subgradient of phi.
  ProblemSubgrad phi_subgrad;
  /// Noise-free subgradient of phi; equals phi_subgrad unless noise was
  /// attached.
  ProblemSubgrad phi_subgrad_exact;
  std::optional<Regularizer> reg;
  /// Upper bound on subgradient norms of phi over Omega_1.
  double lipschitz_est = 0.0;
  bool smooth = false;
  std::optional<NoiseModel> noise;

  /// f(X) = phi(X) + gamma r(X)
  double value(const Matrix& x) const;
  /// One element of the subdifferential of f, through the (possibly noisy)
  /// phi oracle.
  Matrix subgradient(const Matrix& x, Rng& rng) const;
  /// Same, through the noise-free oracle.
  Matrix exact_subgradient(const Matrix& x) const;
};

/// phi(X) = -tr(X^T A X), gradient -2 A X.
ProblemDefinition make_quadratic_trace(const Matrix& a, Eigen::Index p);

/// phi(X) = -tr(X^T S X) with an l1 regularizer of weight gamma.
ProblemDefinition make_sparse_pca(const Matrix& sigma, double gamma,
                                  Eigen::Index p);

/// phi(X) = -||A X||_{1,1}; subgradient -A^T sign(A X) with sign(0) = 0.
ProblemDefinition make_l1_pca(const Matrix& a, Eigen::Index p);

/// f(X) = <C, X>: constant gradient C. Mostly useful for checks.
ProblemDefinition make_linear(const Matrix& c);

/// f == 0 on n x p matrices.
ProblemDefinition make_zero(Eigen::Index n, Eigen::Index p);

/// Adds gamma ||X||_1 to a problem without a regularizer.
ProblemDefinition attach_l1_regularizer(ProblemDefinition problem,
                                        double gamma);

/// Replaces the phi oracle by G + xi with xi drawn from `model`.
ProblemDefinition attach_noise(ProblemDefinition problem,
                               const NoiseModel& model);

/// Sampled subgradient-norm constants over Omega_1. The values are raw
/// maxima (lower bounds of the true suprema); use inflated() before feeding
/// them into safeguard formulas.
struct ConstantEstimates {
  double m1 = 0.0;       ///< max ||W|| over W = oracle(A(X))
  double m_tilde = 0.0;  ///< max ||J_A(X)[W]|| over the same W
  double m_hat = 0.0;    ///< max ||oracle(X)||

  static constexpr double kInflation = 1.5;
  ConstantEstimates inflated() const {
    return {kInflation * m1, kInflation * m_tilde, kInflation * m_hat};
  }
};

ConstantEstimates estimate_constants(const ProblemDefinition& problem,
                                     int samples, std::uint64_t seed);

/// Samples X = Q (I + E) with Q feasible and E symmetric, scaled so that
/// ||X^T X - I||_F equals `radius` (radius < 1).
Matrix sample_at_violation(Eigen::Index n, Eigen::Index p, double radius,
                           Rng& rng);
/// Uniformly drawn radius in (0, r], then sample_at_violation.
Matrix sample_in_shell(Eigen::Index n, Eigen::Index p, double r, Rng& rng);
/// Gaussian matrix projected onto the Stiefel manifold.
Matrix random_stiefel(Eigen::Index n, Eigen::Index p, Rng& rng);

// ---------------------------------------------------------------------------
// Two-layer ReLU network with an orthogonally constrained first layer.

struct Sample {
  Vector x;
  Vector y;
};

struct MlpShape {
  Eigen::Index input = 0;
  Eigen::Index hidden = 0;
  Eigen::Index output = 0;
};

/// Parameters of y = W2 relu(W1 x + b1) + b2. The Stiefel block is stored
/// tall as X = W1^T (input x hidden), so input >= hidden.
struct MlpParams {
  Matrix x;   ///< W1^T
  Vector b1;
  Matrix w2;  ///< output x hidden
  Vector b2;
};

struct MlpGradient {
  Matrix x;
  Vector b1;
  Matrix w2;
  Vector b2;
};

/// Mean squared error of the network and its reverse-mode subgradient with
/// relu'(0) = 0 (a conservative-field element at kinks).
class MlpLoss {
 public:
  MlpLoss(std::vector<Sample> data, MlpShape shape);

  double value(const MlpParams& params) const;
  MlpGradient gradient(const MlpParams& params) const;
  const MlpShape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }

 private:
  std::vector<Sample> data_;
  MlpShape shape_;
};

/// Problem over the Stiefel block W1^T with the Euclidean parameters
/// (b1, W2, b2) held at `fixed`.
ProblemDefinition make_orthogonal_mlp(std::vector<Sample> data,
                                      const MlpShape& shape,
                                      const MlpParams& fixed);

// ---------------------------------------------------------------------------
// Data helpers.

/// Dense matrix from a header-free, comma-separated, row-major CSV file.
Matrix load_dense_csv(const std::string& path);

/// Seeded Gaussian data matrix.
Matrix synthetic_gaussian(Eigen::Index rows, Eigen::Index cols,
                          std::uint64_t seed);

/// Spiked covariance with `p` planted sparse loadings: the n coordinates
/// are split into p contiguous groups, loading j is a random-sign vector
/// supported on group j, and Sigma = sum_j lambda_j v_j v_j^T + W with W a
/// small group-diagonal PSD term.
Matrix synthetic_sparse_covariance(Eigen::Index n, Eigen::Index p,
                                   std::uint64_t seed);

}  // namespace cdf
