#pragma once

// Numerical kernels of the constraint dissolving approach for optimization
// over the Stiefel manifold S(n,p) = { X : X^T X = I_p }.
//
// The constraint dissolving map
//     A(X) = X (15 I - 10 X^T X + 3 (X^T X)^2) / 8
// fixes S(n,p) pointwise and acts on singular values through the odd quintic
// psi(t) = t (15 - 10 t^2 + 3 t^4) / 8, which is a strictly increasing
// bijection of the real line. The penalty
//     h(X) = f(A(X)) + (beta / 4) ||X^T X - I||_F^2
// is then minimized without constraints.

#include "cdf/types.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace cdf {

/// Symmetric part (M + M^T) / 2 of a square matrix.
Matrix sym(const Matrix& m);

/// ||X^T X - I_p||_F
double feasibility_violation(const Matrix& x);

/// Throws ValidationError on NaN/Inf entries and DimensionError when the
/// matrix is empty or has fewer rows than columns.
void validate_matrix(const Matrix& x, const char* what = "X");

/// Membership in the shell Omega_r = { X : ||X^T X - I||_F <= r }.
class FeasibilityShell {
 public:
  explicit FeasibilityShell(double radius);

  double radius() const { return radius_; }
  bool contains(const Matrix& x) const {
    return feasibility_violation(x) <= radius_;
  }

 private:
  double radius_;
};

/// A matrix certified to satisfy ||X^T X - I||_F <= feas_tol.
class StiefelPoint {
 public:
  static constexpr double kDefaultTol = 1e-12;

  /// Throws ValidationError when the matrix is not feasible to `feas_tol`.
  explicit StiefelPoint(Matrix x, double feas_tol = kDefaultTol,
                        bool rank_deficient = false);

  const Matrix& matrix() const { return x_; }
  double feas_tol() const { return feas_tol_; }
  /// Set by project_stiefel when the input had a singular value below 1e-12,
  /// in which case the projection is not unique.
  bool rank_deficient() const { return rank_deficient_; }

 private:
  Matrix x_;
  double feas_tol_;
  bool rank_deficient_;
};

class PenaltyConfig {
 public:
  explicit PenaltyConfig(double beta);
  double beta() const { return beta_; }

 private:
  double beta_;
};

/// Constraint dissolving map A(X).
Matrix apply_A(const Matrix& x);

/// A(X) evaluated in extended precision.
MatrixL apply_A_extended(const MatrixL& x);

/// psi(t) = t (15 - 10 t^2 + 3 t^4) / 8, the action of A on one singular value.
double psi(double t);
/// psi'(t) = (15/8) (t^2 - 1)^2
double psi_derivative(double t);

/// Both sides of
///     A(X)^T A(X) - I = (1/64) (G - I)^3 (9 G^2 - 33 G + 64 I),  G = X^T X.
/// The sides are formed in extended precision; `residual` is their Frobenius
/// distance computed before rounding back to double. For moderately sized X
/// both sides reach ~1e8 in magnitude, so a double evaluation cannot resolve
/// the identity at the 1e-11 level.
struct AtaResidual {
  Matrix lhs;
  Matrix rhs;
  double residual = 0.0;
};
AtaResidual ata_residual_identity(const Matrix& x);

/// Jacobian of A at X applied to D:
///   D (15 I - 10 G + 3 G^2) / 8 - X sym(X^T D) + (3/2) X sym(sym(X^T D)(G - I)).
Matrix jacobian_apply(const Matrix& x, const Matrix& d);

/// Polar projection U V^T from the economical SVD X = U S V^T.
StiefelPoint project_stiefel(const Matrix& x);

/// D - X sym(X^T D), the projection onto the tangent space at a feasible X.
Matrix tangent_project(const Matrix& x, const Matrix& d);

/// Preimage of Y under A, solved per singular value by safeguarded
/// bisection followed by a Newton polish. Satisfies
/// ||A(X) - Y||_F <= tol * max(1, ||Y||_F).
Matrix inverse_A(const Matrix& y, double tol = 1e-14);

/// Scalar inverse psi^{-1}(sigma). Throws NumericalError if the bracket
/// fails to close (never expected: psi is monotone).
double psi_inverse(double sigma);

using ValueOracle = std::function<double(const Matrix&)>;
using SubgradOracle = std::function<Matrix(const Matrix&)>;

/// h(X) = f(A(X)) + (beta/4) ||X^T X - I||_F^2
double ncdf_value(const ValueOracle& f, const Matrix& x,
                  const PenaltyConfig& cfg);

/// J_A(X)[W] + beta X (X^T X - I) with W = f_sub(A(X)).
Matrix ncdf_subgradient(const SubgradOracle& f_sub, const Matrix& x,
                        const PenaltyConfig& cfg);

/// Generalized map X (15 I - 10 X^T B X + 3 (X^T B X)^2) / 8 for the
/// constraint X^T B X = I with B symmetric positive definite.
Matrix apply_A_generalized(const Matrix& x, const Matrix& b);

/// Point of a product of Stiefel manifolds and a Euclidean space.
struct ProductPoint {
  std::vector<Matrix> blocks;
  Vector euclid;
};

/// Applies A blockwise and passes the Euclidean part through.
ProductPoint apply_A_product(const ProductPoint& point);

}  // namespace cdf
