#include "cdf/core.hpp"
#include "cdf/problems.hpp"

#include <doctest.h>

#include <cmath>

using namespace cdf;

namespace {

Matrix m11(double v) { return Matrix::Constant(1, 1, v); }

Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (auto r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

Matrix first_columns(Eigen::Index n, Eigen::Index p) {
  return Matrix::Identity(n, n).leftCols(p);
}

}  // namespace

TEST_CASE("sym takes the symmetric part") {
  CHECK(sym(Matrix::Identity(2, 2)).isApprox(Matrix::Identity(2, 2)));
  CHECK(sym(from_rows({{0, 1}, {0, 0}})) == from_rows({{0, 0.5}, {0.5, 0}}));
  CHECK(sym(from_rows({{1, 2}, {4, 3}})) == from_rows({{1, 3}, {3, 3}}));
  CHECK_THROWS_AS(sym(Matrix::Zero(2, 3)), DimensionError);
}

TEST_CASE("input validation") {
  Matrix bad = Matrix::Zero(3, 2);
  bad(1, 1) = std::nan("");
  CHECK_THROWS_AS(apply_A(bad), ValidationError);
  CHECK_THROWS_AS(apply_A(Matrix::Zero(2, 3)), DimensionError);
  CHECK_THROWS_AS(apply_A(Matrix(0, 0)), DimensionError);
  CHECK_THROWS_AS(PenaltyConfig(0.0), ValidationError);
  CHECK_THROWS_AS(FeasibilityShell(-1.0), ValidationError);
  CHECK_THROWS_AS(StiefelPoint(m11(2.0)), ValidationError);
}

TEST_CASE("apply_A examples") {
  const Matrix x = first_columns(3, 2);
  CHECK((apply_A(x) - x).norm() == doctest::Approx(0.0));
  CHECK(apply_A(m11(0.0))(0, 0) == 0.0);
  CHECK(apply_A(m11(2.0))(0, 0) == doctest::Approx(5.75).epsilon(1e-15));
}

TEST_CASE("apply_A acts on singular values through psi") {
  Rng rng = make_rng(3, 0);
  const Matrix u = random_stiefel(6, 3, rng);
  const Matrix v = random_stiefel(3, 3, rng);
  Vector s(3);
  s << 0.3, 1.4, 2.2;
  const Matrix x = u * s.asDiagonal() * v.transpose();
  Vector ps(3);
  for (int i = 0; i < 3; ++i) ps(i) = psi(s(i));
  CHECK((apply_A(x) - u * ps.asDiagonal() * v.transpose()).norm() < 1e-13);
}

TEST_CASE("psi scalar oracle") {
  CHECK(psi(2.0) == doctest::Approx(23.0 / 4.0));
  CHECK(psi_derivative(2.0) == doctest::Approx(135.0 / 8.0));
  CHECK(psi(1.0) == doctest::Approx(1.0));
  CHECK(psi_derivative(1.0) == 0.0);
  CHECK(psi(-0.7) == doctest::Approx(-psi(0.7)));
  // strictly increasing on a grid
  double prev = psi(-3.0);
  for (int i = 1; i <= 600; ++i) {
    const double cur = psi(-3.0 + 0.01 * i);
    CHECK(cur > prev);
    prev = cur;
  }
}

TEST_CASE("feasibility_violation examples") {
  CHECK(feasibility_violation(first_columns(4, 2)) == doctest::Approx(0.0));
  CHECK(feasibility_violation(m11(2.0)) == doctest::Approx(3.0));
  CHECK(feasibility_violation(Matrix::Zero(5, 3)) == doctest::Approx(std::sqrt(3.0)));
  FeasibilityShell shell(0.5);
  CHECK(shell.contains(first_columns(3, 1)));
  CHECK_FALSE(shell.contains(m11(2.0)));
}

TEST_CASE("ata identity examples") {
  const auto feasible = ata_residual_identity(first_columns(4, 3));
  CHECK(feasible.lhs.norm() < 1e-15);
  CHECK(feasible.rhs.norm() < 1e-15);
  const auto scalar = ata_residual_identity(m11(2.0));
  CHECK(scalar.lhs(0, 0) == doctest::Approx(32.0625));
  CHECK(scalar.rhs(0, 0) == doctest::Approx(27.0 * 76.0 / 64.0));
  CHECK(scalar.residual < 1e-13);
}

TEST_CASE("ata lhs obeys the cubic bound on Omega_1") {
  Rng rng = make_rng(11, 0);
  for (int s = 0; s < 200; ++s) {
    const Matrix x = sample_in_shell(7, 3, 1.0, rng);
    const double v = feasibility_violation(x);
    CHECK(ata_residual_identity(x).lhs.norm() <= v * v * v + 1e-12);
  }
}

TEST_CASE("jacobian examples") {
  const Matrix e1 = first_columns(2, 1);
  const Matrix e2 = Matrix::Identity(2, 2).col(1);
  CHECK((jacobian_apply(e1, e2) - e2).norm() < 1e-15);
  CHECK(jacobian_apply(e1, e1).norm() < 1e-15);
  CHECK(jacobian_apply(m11(2.0), m11(1.0))(0, 0) == doctest::Approx(16.875));
  const double t = 1e-5;
  const double fd = (psi(2.0 + t) - psi(2.0 - t)) / (2 * t);
  CHECK(fd == doctest::Approx(16.875).epsilon(1e-9));
  CHECK_THROWS_AS(jacobian_apply(e1, Matrix::Zero(3, 1)), DimensionError);
}

TEST_CASE("jacobian is linear in the direction") {
  Rng rng = make_rng(5, 0);
  const Matrix x = uniform_matrix(5, 2, -1, 1, rng);
  const Matrix d = gaussian_matrix(5, 2, rng);
  const Matrix w = gaussian_matrix(5, 2, rng);
  const Matrix lhs = jacobian_apply(x, 2.0 * d - 3.0 * w);
  const Matrix rhs = 2.0 * jacobian_apply(x, d) - 3.0 * jacobian_apply(x, w);
  CHECK((lhs - rhs).norm() < 1e-12 * std::max(1.0, rhs.norm()));
}

TEST_CASE("projection examples") {
  const Matrix q = first_columns(3, 2);
  CHECK((project_stiefel(q).matrix() - q).norm() < 1e-15);
  Rng rng = make_rng(2, 0);
  const Matrix q2 = random_stiefel(6, 3, rng);
  CHECK((project_stiefel(2.0 * q2).matrix() - q2).norm() < 1e-14);
  CHECK(project_stiefel(m11(0.5)).matrix()(0, 0) == doctest::Approx(1.0));
  CHECK(project_stiefel(m11(-0.5)).matrix()(0, 0) == doctest::Approx(-1.0));
  CHECK_FALSE(project_stiefel(q2).rank_deficient());
}

TEST_CASE("rank deficient projection is flagged but returned") {
  Matrix x = Matrix::Zero(3, 2);
  x(0, 0) = 1.0;
  const StiefelPoint pt = project_stiefel(x);
  CHECK(pt.rank_deficient());
  CHECK(feasibility_violation(pt.matrix()) <= 1e-12);
}

TEST_CASE("tangent projection") {
  const Matrix e1 = first_columns(2, 1);
  Matrix c(2, 1);
  c << 3.0, -4.0;
  const Matrix t = tangent_project(e1, c);
  CHECK(t(0, 0) == doctest::Approx(0.0));
  CHECK(t(1, 0) == doctest::Approx(-4.0));
}

TEST_CASE("inverse examples") {
  const Matrix q = first_columns(4, 2);
  CHECK((inverse_A(apply_A(q)) - q).norm() < 1e-12);
  CHECK(inverse_A(m11(5.75))(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(inverse_A(m11(0.0))(0, 0) == 0.0);
  CHECK(psi_inverse(-5.75) == doctest::Approx(-2.0));
  CHECK(psi_inverse(1.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(inverse_A(m11(1.0), 0.0), ValidationError);
}

TEST_CASE("inverse meets its residual contract") {
  Rng rng = make_rng(19, 0);
  for (int s = 0; s < 50; ++s) {
    const Matrix y = uniform_matrix(6, 3, -3, 3, rng);
    const Matrix x = inverse_A(y);
    CHECK((apply_A(x) - y).norm() <= 1e-14 * std::max(1.0, y.norm()) * 10);
  }
}

TEST_CASE("penalty value examples") {
  const PenaltyConfig one(1.0);
  auto zero = [](const Matrix&) { return 0.0; };
  auto total = [](const Matrix& y) { return y.sum(); };
  CHECK(ncdf_value(zero, m11(2.0), one) == doctest::Approx(2.25));
  CHECK(ncdf_value(total, m11(2.0), one) == doctest::Approx(8.0));
  Rng rng = make_rng(1, 0);
  const Matrix q = random_stiefel(5, 2, rng);
  CHECK(ncdf_value(total, q, PenaltyConfig(7.0)) == doctest::Approx(q.sum()));
}

TEST_CASE("penalty subgradient examples") {
  auto unit_grad = [](const Matrix& y) { return Matrix::Ones(y.rows(), y.cols()); };
  auto zero_grad = [](const Matrix& y) { return Matrix::Zero(y.rows(), y.cols()); };
  CHECK(ncdf_subgradient(unit_grad, m11(2.0), PenaltyConfig(1.0))(0, 0) ==
        doctest::Approx(22.875));
  CHECK(ncdf_subgradient(zero_grad, m11(2.0), PenaltyConfig(2.0))(0, 0) ==
        doctest::Approx(12.0));

  Rng rng = make_rng(4, 0);
  const Matrix x = random_stiefel(5, 2, rng);
  const Matrix c = gaussian_matrix(5, 2, rng);
  auto lin = [&c](const Matrix&) { return c; };
  const Matrix g = ncdf_subgradient(lin, x, PenaltyConfig(3.0));
  CHECK((g - (c - x * sym(x.transpose() * c))).norm() < 1e-12);
  auto bad = [](const Matrix&) { return Matrix::Zero(1, 1); };
  CHECK_THROWS_AS(ncdf_subgradient(bad, x, PenaltyConfig(1.0)), DimensionError);
}

TEST_CASE("generalized map") {
  Rng rng = make_rng(8, 0);
  const Matrix x = uniform_matrix(4, 2, -1, 1, rng);
  CHECK((apply_A_generalized(x, Matrix::Identity(4, 4)) - apply_A(x)).norm() < 1e-14);
  CHECK(apply_A_generalized(m11(0.5), m11(4.0))(0, 0) == doctest::Approx(0.5));

  // X with X^T B X = I is fixed: X = L^{-T} Q for B = L L^T.
  const Matrix g = gaussian_matrix(4, 4, rng);
  const Matrix b = g * g.transpose() + Matrix::Identity(4, 4);
  const Matrix l = Eigen::LLT<Matrix>(b).matrixL();
  const Matrix q = random_stiefel(4, 2, rng);
  const Matrix xb = l.transpose().triangularView<Eigen::Upper>().solve(q);
  CHECK((apply_A_generalized(xb, b) - xb).norm() < 1e-12);

  Matrix asym = Matrix::Identity(4, 4);
  asym(0, 1) = 0.1;
  CHECK_THROWS_AS(apply_A_generalized(x, asym), ValidationError);
  CHECK_THROWS_AS(apply_A_generalized(x, -Matrix::Identity(4, 4)), ValidationError);
}

TEST_CASE("product map") {
  ProductPoint pt;
  pt.blocks = {m11(2.0), first_columns(3, 2)};
  pt.euclid = Vector(2);
  pt.euclid << 1.0, -1.0;
  const ProductPoint out = apply_A_product(pt);
  REQUIRE(out.blocks.size() == 2);
  CHECK(out.blocks[0](0, 0) == doctest::Approx(5.75));
  CHECK((out.blocks[1] - pt.blocks[1]).norm() < 1e-15);
  CHECK(out.euclid == pt.euclid);

  ProductPoint single;
  single.blocks = {m11(0.3)};
  CHECK(apply_A_product(single).blocks[0](0, 0) == doctest::Approx(psi(0.3)));
  CHECK(apply_A_product(single).euclid.size() == 0);
}
