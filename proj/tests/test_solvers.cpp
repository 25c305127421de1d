#include "cdf/core.hpp"
#include "cdf/solvers.hpp"

#include <doctest.h>

#include <cmath>

using namespace cdf;

namespace {

Matrix m11(double v) { return Matrix::Constant(1, 1, v); }

ProblemDefinition desk_quadratic() {
  Vector d(6);
  d << 6, 5, 4, 3, 2, 1;
  return make_quadratic_trace(d.asDiagonal(), 2);
}

SolverConfig short_config(long iters, double eta0) {
  SolverConfig cfg;
  cfg.beta = 1.0;
  cfg.schedule.kind = ScheduleKind::kConstant;
  cfg.schedule.eta0 = eta0;
  cfg.max_iters = iters;
  cfg.seed = 3;
  cfg.stop_check_every = 0;
  cfg.record_time = false;
  return cfg;
}

}  // namespace

TEST_CASE("step schedule") {
  StepSchedule s;
  s.eta0 = 0.1;
  s.iters_per_epoch = 10;
  CHECK(s.at(0) == doctest::Approx(0.1));
  CHECK(s.at(9) == doctest::Approx(0.1));
  CHECK(s.at(10) == doctest::Approx(0.1 / 1.1));
  CHECK(s.at(100) == doctest::Approx(0.05));
  s.kind = ScheduleKind::kCustom;
  s.custom = {0.3, 0.2};
  CHECK(s.at(0) == 0.3);
  CHECK(s.at(7) == 0.2);
  CHECK(s.max_step() == 0.3);
  s.custom.clear();
  CHECK_THROWS_AS(s.validate(), ConfigError);
  StepSchedule neg;
  neg.eta0 = -1;
  CHECK_THROWS_AS(neg.validate(), ConfigError);
}

TEST_CASE("algorithm names round trip") {
  for (Algorithm a : {Algorithm::kNcdfSgd, Algorithm::kNcdfProxSgd, Algorithm::kRsgdBaseline})
    CHECK(parse_algorithm(algorithm_name(a)) == a);
  CHECK_FALSE(parse_algorithm("adam").has_value());
}

TEST_CASE("subgradient step examples") {
  Rng rng = make_rng(1, 0);
  const Matrix x = random_stiefel(4, 2, rng);
  const Matrix d = gaussian_matrix(4, 2, rng);
  CHECK(subgradient_step(x, d, 0.0, 1.0) == x);
  CHECK((subgradient_step(x, Matrix::Zero(4, 2), 0.3, 2.0) - x).norm() < 1e-14);
  CHECK(subgradient_step(m11(2), m11(1), 0.1, 1.0)(0, 0) == doctest::Approx(1.3));
  CHECK_THROWS_AS(subgradient_step(m11(1e300), m11(1), 1.0, 1e300), DivergenceError);
}

TEST_CASE("prox step examples") {
  Rng rng = make_rng(2, 0);
  const Matrix x = random_stiefel(4, 2, rng);
  const Matrix d = gaussian_matrix(4, 2, rng);
  CHECK((prox_subgradient_step(x, d, 0.2, nullptr) - (apply_A(x) - 0.2 * d)).norm() < 1e-14);

  const Regularizer l1 = make_l1_regularizer(0.5, 4, 2);
  CHECK((prox_subgradient_step(x, Matrix::Zero(4, 2), 0.2, &l1) -
         soft_threshold(x, 0.1)).norm() < 1e-14);

  const Regularizer scalar = make_l1_regularizer(0.5, 1, 1);
  CHECK(prox_subgradient_step(m11(2), m11(1), 0.1, &scalar)(0, 0) == doctest::Approx(5.6));
}

TEST_CASE("stationarity estimate examples") {
  Matrix e1(2, 1), e2(2, 1);
  e1 << 1, 0;
  e2 << 0, 1;
  CHECK(stationarity_estimate(make_linear(e2), StiefelPoint(e1)) == doctest::Approx(1.0));

  Rng rng = make_rng(3, 0);
  const Matrix x = random_stiefel(5, 2, rng);
  const Matrix s = gaussian_matrix(2, 2, rng);
  const Matrix c = x * (s + s.transpose());
  CHECK(stationarity_estimate(make_linear(c), StiefelPoint(x)) < 1e-13);

  const auto prob = desk_quadratic();
  CHECK(stationarity_estimate(prob, StiefelPoint(Matrix::Identity(6, 2))) <= 1e-8);
}

TEST_CASE("zero objective keeps the initial point") {
  SolverConfig cfg = short_config(30, 0.1);
  Rng rng = make_rng(4, 0);
  cfg.x0 = random_stiefel(5, 2, rng);
  const auto prob = make_zero(5, 2);
  for (Algorithm a : {Algorithm::kNcdfSgd, Algorithm::kRsgdBaseline}) {
    const auto r = run_solver(a, prob, cfg);
    CHECK((r.final_x - *cfg.x0).norm() < 1e-14);
  }
}

TEST_CASE("trace has one record per iteration and is deterministic") {
  const auto prob = desk_quadratic();
  SolverConfig cfg = short_config(100, 0.01);
  const auto a = run_subgradient(prob, cfg);
  const auto b = run_subgradient(prob, cfg);
  REQUIRE(a.trace.size() == 100);
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].iter == static_cast<long>(i + 1));
    CHECK(a.trace[i].f == b.trace[i].f);
    CHECK(a.trace[i].h == b.trace[i].h);
    CHECK(a.trace[i].feas == b.trace[i].feas);
    CHECK(a.trace[i].stat == b.trace[i].stat);
    CHECK(std::isfinite(a.trace[i].h));
  }
  CHECK(a.final_x == b.final_x);
}

TEST_CASE("trace stride thins the records") {
  SolverConfig cfg = short_config(95, 0.01);
  cfg.trace_stride = 10;
  const auto r = run_subgradient(desk_quadratic(), cfg);
  REQUIRE(r.trace.size() == 10);
  CHECK(r.trace.front().iter == 10);
  CHECK(r.trace.back().iter == 95);
}

TEST_CASE("projected result is the polar projection of the final iterate") {
  const auto r = run_subgradient(desk_quadratic(), short_config(200, 0.01));
  CHECK((r.projected.matrix() - project_stiefel(r.final_x).matrix()).norm() == 0.0);
  CHECK(feasibility_violation(r.projected.matrix()) <= 1e-12);
}

TEST_CASE("merit decreases with a small constant step on the quadratic trace") {
  const auto prob = desk_quadratic();
  SolverConfig cfg = short_config(500, 1e-3);
  const auto r = run_subgradient(prob, cfg);
  for (std::size_t i = 1; i < r.trace.size(); ++i)
    CHECK(r.trace[i].h <= r.trace[i - 1].h + 1e-10);
}

TEST_CASE("projection finishing does not increase h near the manifold") {
  const auto prob = desk_quadratic();
  SolverConfig cfg = short_config(2000, 0.02);
  cfg.beta = 10.0;
  const auto r = run_subgradient(prob, cfg);
  const double feas = feasibility_violation(r.final_x);
  const double m1 = prob.lipschitz_est;
  REQUIRE(feas <= 0.5);
  if (feas < cfg.beta / (16 * m1)) {
    CHECK(ncdf_value(prob, r.projected.matrix(), cfg.beta) <=
          ncdf_value(prob, r.final_x, cfg.beta) + 1e-10);
  }
}

TEST_CASE("ncdf_sgd reaches the eigen optimum on the desk instance") {
  SolverConfig cfg = short_config(20000, 0.01);
  cfg.beta = 20.0;
  cfg.schedule.kind = ScheduleKind::kHarmonicDecay;
  cfg.schedule.iters_per_epoch = 100;
  cfg.stop_check_every = 10;
  const auto r = run_subgradient(desk_quadratic(), cfg);
  CHECK(desk_quadratic().value(r.projected.matrix()) == doctest::Approx(-11.0).epsilon(1e-5));
}

TEST_CASE("riemannian baseline stays feasible") {
  SolverConfig cfg = short_config(300, 0.02);
  const auto r = run_riemannian_baseline(desk_quadratic(), cfg);
  for (const auto& rec : r.trace) CHECK(rec.feas <= 1e-10);
  SolverConfig bad = cfg;
  bad.x0 = 1.05 * Matrix::Identity(6, 2);
  CHECK_THROWS_AS(run_riemannian_baseline(desk_quadratic(), bad), ConfigError);
}

TEST_CASE("prox method with zero step repeats the map and converges cubically") {
  const auto prob = make_sparse_pca(Matrix::Identity(4, 4), 0.1, 2);
  SolverConfig cfg = short_config(4, 0.0);
  Matrix x0 = Matrix::Identity(4, 2) * 1.05;
  cfg.x0 = x0;
  const auto r = run_prox_subgradient(prob, cfg);
  Matrix x = x0;
  for (int k = 0; k < 4; ++k) x = apply_A(x);
  CHECK((r.final_x - x).norm() < 1e-15);
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    const double prev = r.trace[i - 1].feas;
    CHECK(r.trace[i].feas <= prev * prev * prev + 1e-15);
  }
}

TEST_CASE("prox method with zero weight follows the plain step") {
  Rng rng = make_rng(5, 0);
  const Matrix z = gaussian_matrix(5, 5, rng);
  const Matrix sigma = z * z.transpose() / 5.0;
  const auto prob = make_sparse_pca(sigma, 0.0, 2);
  SolverConfig cfg = short_config(20, 0.01);
  const auto r = run_prox_subgradient(prob, cfg);
  Rng init = make_rng(cfg.seed, 0x1417);
  Matrix x = random_stiefel(5, 2, init);
  for (int k = 0; k < 20; ++k) x = apply_A(x) - 0.01 * (-2.0 * sigma * x);
  CHECK((r.final_x - x).norm() < 1e-12);
}

TEST_CASE("prox method needs a regularizer") {
  CHECK_THROWS_AS(run_prox_subgradient(desk_quadratic(), short_config(5, 0.01)),
                  ConfigError);
}

TEST_CASE("safeguards are enforced") {
  const auto prob = desk_quadratic();
  SolverConfig cfg = short_config(10, 0.01);
  cfg.feas_shell_check = true;
  cfg.safeguards = estimate_constants(prob, 100, 1).inflated();
  cfg.beta = safeguard_beta(cfg.safeguards) / 2;
  CHECK_THROWS_AS(run_subgradient(prob, cfg), SafeguardViolation);
  cfg.beta = safeguard_beta(cfg.safeguards);
  cfg.schedule.eta0 = 2 * safeguard_step_sgd(cfg.beta);
  CHECK_THROWS_AS(run_subgradient(prob, cfg), SafeguardViolation);
  cfg.schedule.eta0 = safeguard_step_sgd(cfg.beta);
  CHECK_NOTHROW(run_subgradient(prob, cfg));
}

TEST_CASE("initial point outside the shell is rejected") {
  SolverConfig cfg = short_config(5, 0.01);
  cfg.x0 = 2.0 * Matrix::Identity(6, 2);
  CHECK_THROWS_AS(run_subgradient(desk_quadratic(), cfg), ConfigError);
}

TEST_CASE("divergence guard") {
  SolverConfig cfg = short_config(200, 0.9);
  cfg.beta = 50.0;
  const auto r = run_subgradient(desk_quadratic(), cfg);
  CHECK(r.reason == Termination::kDivergenceGuard);
  CHECK(std::string(termination_name(r.reason)) == "divergence_guard");
}

TEST_CASE("tolerance stop") {
  SolverConfig cfg = short_config(50000, 0.01);
  cfg.beta = 20.0;
  cfg.stop_check_every = 10;
  cfg.stop_tol_stationarity = 1e-6;
  cfg.stop_tol_feasibility = 1e-8;
  const auto r = run_subgradient(desk_quadratic(), cfg);
  CHECK(r.reason == Termination::kTolMet);
  CHECK(r.iterations < 50000);
  CHECK(r.iterations % 10 == 0);
}

TEST_CASE("grid search") {
  const auto grid = eta0_grid();
  CHECK(grid.size() == 10);
  CHECK(grid.front() == doctest::Approx(0.01));
  CHECK(grid.back() == doctest::Approx(0.9));
  for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] > grid[i - 1]);

  SolverConfig cfg = short_config(0, 0.01);
  cfg.schedule.kind = ScheduleKind::kHarmonicDecay;
  cfg.schedule.iters_per_epoch = 20;
  const auto zero = grid_search_eta0(make_zero(4, 2), cfg, 2, Algorithm::kNcdfSgd);
  CHECK(zero.selected == doctest::Approx(0.01));

  const auto prob = desk_quadratic();
  const auto res = grid_search_eta0(prob, cfg, 3, Algorithm::kNcdfSgd, 2);
  REQUIRE(res.entries.size() == 10);
  double best = INFINITY;
  for (const auto& e : res.entries)
    if (!e.diverged) best = std::min(best, e.final_f);
  SolverConfig again = cfg;
  again.schedule.eta0 = res.selected;
  again.max_iters = 3 * 20;
  const auto rerun = run_subgradient(prob, again);
  CHECK(prob.value(rerun.projected.matrix()) == best);
  CHECK_THROWS_AS(grid_search_eta0(prob, cfg, 0, Algorithm::kNcdfSgd), ConfigError);
}
