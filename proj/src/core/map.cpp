#include "cdf/core.hpp"

// The map coefficients live in their own translation unit so that the
// fault-injection builds (CDF_MUTATE_COEFF = 0, 1 or 2 flips the sign of
// 15, -10 or 3 respectively) only recompile this file.
#ifndef CDF_MUTATE_COEFF
#define CDF_MUTATE_COEFF -1
#endif

namespace cdf {

namespace {

constexpr double kC0 = CDF_MUTATE_COEFF == 0 ? -15.0 : 15.0;
constexpr double kC1 = CDF_MUTATE_COEFF == 1 ? 10.0 : -10.0;
constexpr double kC2 = CDF_MUTATE_COEFF == 2 ? -3.0 : 3.0;

template <typename Mat>
Mat apply_map(const Mat& x) {
  using Scalar = typename Mat::Scalar;
  const Eigen::Index p = x.cols();
  // Expanded around E = X^T X - I: c0 I + c1 G + c2 G^2 =
  // (c0 + c1 + c2) I + (c1 + 2 c2) E + c2 E^2. For the true coefficients the
  // constant term is 8, so the leading X term is carried exactly and only the
  // small correction X E (-4 I + 3 E) / 8 is rounded near the manifold.
  Mat e = x.transpose() * x;
  e = (e + e.transpose()) / Scalar(2);
  e.diagonal().array() -= Scalar(1);
  const Mat corr = Scalar(kC1 + 2 * kC2) * e + Scalar(kC2) * (e * e);
  return Scalar((kC0 + kC1 + kC2) / 8) * x + x * corr / Scalar(8);
}

}  // namespace

Matrix apply_A(const Matrix& x) {
  validate_matrix(x);
  return apply_map(MatrixL(x.cast<long double>())).cast<double>();
}

MatrixL apply_A_extended(const MatrixL& x) { return apply_map(x); }

}  // namespace cdf
