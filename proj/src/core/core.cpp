#include "cdf/core.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace cdf {

namespace {

template <typename Mat>
Mat sym_of(const Mat& m) {
  return (m + m.transpose()) / typename Mat::Scalar(2);
}

long double psi_l(long double t) {
  const long double t2 = t * t;
  return t * (15.0L - 10.0L * t2 + 3.0L * t2 * t2) / 8.0L;
}

long double psi_derivative_l(long double t) {
  const long double s = t * t - 1.0L;
  return 15.0L / 8.0L * s * s;
}

long double psi_inverse_l(long double sigma) {
  if (sigma == 0.0L) return 0.0L;
  const long double target = std::fabs(sigma);
  // psi(1 + e) = 1 + 2.5 e^3 + O(e^4): a singular value within double rounding
  // of 1 cannot be told apart from 1, and resolving it would turn a 1e-16
  // perturbation into a 1e-5 preimage error. t = 1 meets the residual bound.
  constexpr long double kSnap = 4.0L * std::numeric_limits<double>::epsilon();
  if (std::fabs(target - 1.0L) <= kSnap) return sigma < 0.0L ? -1.0L : 1.0L;
  long double lo = -(1.0L + target);
  long double hi = 1.0L + std::max(target, 1.0L);
  constexpr int kMaxBisections = 20000;
  int it = 0;
  for (; it < kMaxBisections; ++it) {
    const long double mid = lo + (hi - lo) / 2.0L;
    if (mid <= lo || mid >= hi) break;
    if (psi_l(mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  if (it == kMaxBisections)
    throw NumericalError("psi_inverse: bisection did not close the bracket");

  long double t = (psi_l(hi) - target) < (target - psi_l(lo)) ? hi : lo;
  // Newton polish, accepted only while it strictly reduces the residual.
  for (int k = 0; k < 4; ++k) {
    const long double d = psi_derivative_l(t);
    if (d == 0.0L) break;
    const long double r = psi_l(t) - target;
    const long double cand = t - r / d;
    if (!(std::fabs(psi_l(cand) - target) < std::fabs(r))) break;
    t = cand;
  }
  return sigma < 0.0L ? -t : t;
}

}  // namespace

void validate_matrix(const Matrix& x, const char* what) {
  if (x.rows() == 0 || x.cols() == 0)
    throw DimensionError(std::string(what) + ": empty matrix");
  if (x.rows() < x.cols())
    throw DimensionError(std::string(what) + ": expected n >= p, got " +
                         std::to_string(x.rows()) + "x" +
                         std::to_string(x.cols()));
  if (!x.allFinite())
    throw ValidationError(std::string(what) + ": non-finite entry");
}

Matrix sym(const Matrix& m) {
  if (m.rows() != m.cols())
    throw DimensionError("sym: expected a square matrix, got " +
                         std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
  return sym_of(m);
}

double feasibility_violation(const Matrix& x) {
  const Eigen::Index p = x.cols();
  Matrix g = x.transpose() * x;
  return (sym_of(g) - Matrix::Identity(p, p)).norm();
}

FeasibilityShell::FeasibilityShell(double radius) : radius_(radius) {
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw ValidationError("FeasibilityShell: radius must be positive");
}

StiefelPoint::StiefelPoint(Matrix x, double feas_tol, bool rank_deficient)
    : x_(std::move(x)), feas_tol_(feas_tol), rank_deficient_(rank_deficient) {
  validate_matrix(x_);
  const double v = feasibility_violation(x_);
  if (!(v <= feas_tol_))
    throw ValidationError("StiefelPoint: ||X^T X - I||_F = " +
                          std::to_string(v) + " exceeds tolerance");
}

PenaltyConfig::PenaltyConfig(double beta) : beta_(beta) {
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw ValidationError("PenaltyConfig: beta must be positive");
}

double psi(double t) { return static_cast<double>(psi_l(t)); }

double psi_derivative(double t) {
  return static_cast<double>(psi_derivative_l(t));
}

double psi_inverse(double sigma) {
  if (!std::isfinite(sigma))
    throw ValidationError("psi_inverse: non-finite argument");
  return static_cast<double>(psi_inverse_l(sigma));
}

AtaResidual ata_residual_identity(const Matrix& x) {
  validate_matrix(x);
  const Eigen::Index p = x.cols();
  const MatrixL xl = x.cast<long double>();
  const MatrixL id = MatrixL::Identity(p, p);
  const MatrixL a = apply_A_extended(xl);
  const MatrixL lhs = a.transpose() * a - id;
  const MatrixL g = sym_of(MatrixL(xl.transpose() * xl));
  const MatrixL e = g - id;
  const MatrixL rhs =
      e * e * e * (9.0L * g * g - 33.0L * g + 64.0L * id) / 64.0L;
  AtaResidual out;
  out.lhs = lhs.cast<double>();
  out.rhs = rhs.cast<double>();
  out.residual = static_cast<double>((lhs - rhs).norm());
  return out;
}

Matrix jacobian_apply(const Matrix& x, const Matrix& d) {
  validate_matrix(x);
  if (d.rows() != x.rows() || d.cols() != x.cols())
    throw DimensionError("jacobian_apply: X and D must have the same shape");
  const Eigen::Index p = x.cols();
  const Matrix id = Matrix::Identity(p, p);
  const Matrix g = sym_of(Matrix(x.transpose() * x));
  const Matrix s = sym_of(Matrix(x.transpose() * d));
  const Matrix poly = 15.0 * id - 10.0 * g + 3.0 * (g * g);
  return d * poly / 8.0 - x * s + 1.5 * x * sym_of(Matrix(s * (g - id)));
}

Matrix tangent_project(const Matrix& x, const Matrix& d) {
  if (d.rows() != x.rows() || d.cols() != x.cols())
    throw DimensionError("tangent_project: X and D must have the same shape");
  return d - x * sym_of(Matrix(x.transpose() * d));
}

StiefelPoint project_stiefel(const Matrix& x) {
  validate_matrix(x);
  Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const bool deficient = svd.singularValues().minCoeff() < 1e-12;
  return StiefelPoint(svd.matrixU() * svd.matrixV().transpose(),
                      StiefelPoint::kDefaultTol, deficient);
}

Matrix inverse_A(const Matrix& y, double tol) {
  validate_matrix(y, "Y");
  if (!(tol > 0.0)) throw ValidationError("inverse_A: tol must be positive");
  // The preimage is ill-conditioned at singular values near 1 (psi' has a
  // double root there), so the decomposition is carried in extended precision.
  const MatrixL yl = y.cast<long double>();
  Eigen::JacobiSVD<MatrixL> svd(yl, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  Eigen::Matrix<long double, Eigen::Dynamic, 1> t(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) t(i) = psi_inverse_l(sv(i));
  const MatrixL x = svd.matrixU() * t.asDiagonal() * svd.matrixV().transpose();
  return x.cast<double>();
}

double ncdf_value(const ValueOracle& f, const Matrix& x,
                  const PenaltyConfig& cfg) {
  const double v = feasibility_violation(x);
  return f(apply_A(x)) + cfg.beta() / 4.0 * v * v;
}

Matrix ncdf_subgradient(const SubgradOracle& f_sub, const Matrix& x,
                        const PenaltyConfig& cfg) {
  const Matrix w = f_sub(apply_A(x));
  if (w.rows() != x.rows() || w.cols() != x.cols())
    throw DimensionError("ncdf_subgradient: oracle returned wrong shape");
  const Eigen::Index p = x.cols();
  const Matrix g = sym_of(Matrix(x.transpose() * x));
  return jacobian_apply(x, w) + cfg.beta() * x * (g - Matrix::Identity(p, p));
}

Matrix apply_A_generalized(const Matrix& x, const Matrix& b) {
  validate_matrix(x);
  if (b.rows() != x.rows() || b.cols() != x.rows())
    throw DimensionError("apply_A_generalized: B must be n x n");
  if (!b.allFinite())
    throw ValidationError("apply_A_generalized: non-finite entry in B");
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  if ((b - b.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw ValidationError("apply_A_generalized: B is not symmetric");
  Eigen::LLT<Matrix> llt(b);
  if (llt.info() != Eigen::Success)
    throw ValidationError("apply_A_generalized: B is not positive definite");
  const Eigen::Index p = x.cols();
  const Matrix g = sym_of(Matrix(x.transpose() * b * x));
  const Matrix poly =
      15.0 * Matrix::Identity(p, p) - 10.0 * g + 3.0 * (g * g);
  return x * poly / 8.0;
}

ProductPoint apply_A_product(const ProductPoint& point) {
  ProductPoint out;
  out.blocks.reserve(point.blocks.size());
  for (const auto& block : point.blocks) out.blocks.push_back(apply_A(block));
  out.euclid = point.euclid;
  return out;
}

}  // namespace cdf
