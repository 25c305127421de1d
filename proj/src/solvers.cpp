#include "cdf/solvers.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

namespace cdf {

namespace {

constexpr double kShellRadius = 1.0 / 6.0;
constexpr double kShellSlack = 1e-12;
constexpr double kDivergenceFeas = 10.0;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

Matrix initial_point(const ProblemDefinition& problem, const SolverConfig& cfg) {
  if (cfg.x0) {
    if (cfg.x0->rows() != problem.n || cfg.x0->cols() != problem.p)
      throw DimensionError("initial point has wrong shape");
    validate_matrix(*cfg.x0, "X0");
    return *cfg.x0;
  }
  Rng rng = make_rng(cfg.seed, 0x1417);
  return random_stiefel(problem.n, problem.p, rng);
}

/// One iteration: maps X_k to X_{k+1} using the iteration's random stream.
using StepFn = std::function<Matrix(const Matrix&, double eta, Rng&)>;
/// Merit value recorded in the trace.
using MeritFn = std::function<double(const Matrix&)>;

SolverResult drive(const ProblemDefinition& problem, const SolverConfig& cfg,
                   Algorithm algo, const StepFn& step, const MeritFn& merit) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto elapsed = [&] {
    return cfg.record_time
               ? std::chrono::duration<double>(Clock::now() - start).count()
               : 0.0;
  };

  Matrix x = initial_point(problem, cfg);
  const double feas0 = feasibility_violation(x);
  if (feas0 > kShellRadius)
    throw ConfigError("initial point violates ||X^T X - I||_F <= 1/6 (got " +
                      fmt(feas0) + ")");

  IterateTrace trace;
  if (cfg.trace_stride > 0)
    trace.reserve(static_cast<std::size_t>(cfg.max_iters / cfg.trace_stride + 1));
  Termination reason = Termination::kMaxIters;
  Matrix last_good = x;
  long k = 0;

  auto record = [&](const Matrix& xk, long iter, double feas,
                    const StiefelPoint& proj, double stat) {
    IterateRecord r;
    r.iter = iter;
    r.f = problem.value(proj.matrix());
    r.h_iterate = ncdf_value(problem, xk, cfg.beta);
    r.h = merit ? merit(xk) : r.h_iterate;
    r.feas = feas;
    r.stat = stat;
    r.seconds = elapsed();
    trace.push_back(r);
  };

  while (k < cfg.max_iters) {
    const double eta = cfg.schedule.at(k);
    Rng rng = make_rng(cfg.seed, static_cast<std::uint64_t>(k) + 1);
    Matrix next;
    try {
      next = step(x, eta, rng);
    } catch (const DivergenceError&) {
      reason = Termination::kDivergenceGuard;
      break;
    }
    ++k;
    const double feas = feasibility_violation(next);
    if (!std::isfinite(feas) || feas > kDivergenceFeas) {
      reason = Termination::kDivergenceGuard;
      break;
    }
    if (cfg.feas_shell_check && feas > kShellRadius + kShellSlack)
      throw SafeguardViolation(
          "iterate " + std::to_string(k) + " left Omega_{1/6}: ||X^T X - I||_F = " +
          fmt(feas) + " (bound 1/6)");
    x = std::move(next);
    last_good = x;

    const bool last = k == cfg.max_iters;
    const bool want_record =
        cfg.trace_stride > 0 && (k % cfg.trace_stride == 0 || last);
    const bool want_stop_check =
        cfg.stop_check_every > 0 && k % cfg.stop_check_every == 0;
    if (want_record || want_stop_check) {
      const StiefelPoint proj = project_stiefel(x);
      const double stat = stationarity_estimate(problem, proj);
      if (want_record) record(x, k, feas, proj, stat);
      if (want_stop_check && stat <= cfg.stop_tol_stationarity &&
          feas <= cfg.stop_tol_feasibility) {
        if (!want_record && cfg.trace_stride > 0) record(x, k, feas, proj, stat);
        reason = Termination::kTolMet;
        break;
      }
    }
  }

  SolverResult result{last_good, project_stiefel(last_good), std::move(trace),
                      reason, k, elapsed(), algo};
  return result;
}

void check_sgd_safeguards(const SolverConfig& cfg) {
  const auto& m = cfg.safeguards;
  if (cfg.beta < 16.0 * m.m1)
    throw SafeguardViolation("beta = " + fmt(cfg.beta) + " < 16*M1 = " +
                             fmt(16.0 * m.m1));
  if (cfg.beta < 60.0 * m.m_tilde)
    throw SafeguardViolation("beta = " + fmt(cfg.beta) + " < 60*M_tilde = " +
                             fmt(60.0 * m.m_tilde));
  if (cfg.beta < 16.0 * m.m_hat)
    throw SafeguardViolation("beta = " + fmt(cfg.beta) + " < 16*M_hat = " +
                             fmt(16.0 * m.m_hat));
  const double cap = safeguard_step_sgd(cfg.beta);
  if (cfg.schedule.max_step() > cap)
    throw SafeguardViolation("step " + fmt(cfg.schedule.max_step()) +
                             " exceeds 1/(2*beta) = " + fmt(cap));
}

}  // namespace

// ---------------------------------------------------------------------------

double StepSchedule::at(long k) const {
  switch (kind) {
    case ScheduleKind::kConstant:
      return eta0;
    case ScheduleKind::kCustom:
      if (custom.empty()) return 0.0;
      return custom[static_cast<std::size_t>(
          std::min<long>(k, static_cast<long>(custom.size()) - 1))];
    case ScheduleKind::kHarmonicDecay:
    default: {
      const long epoch = k / std::max(1, iters_per_epoch);
      return eta0 / (0.1 * static_cast<double>(epoch) + 1.0);
    }
  }
}

double StepSchedule::max_step() const {
  if (kind == ScheduleKind::kCustom)
    return custom.empty() ? 0.0 : *std::max_element(custom.begin(), custom.end());
  return eta0;
}

void StepSchedule::validate() const {
  if (kind == ScheduleKind::kCustom) {
    if (custom.empty()) throw ConfigError("custom schedule: empty step list");
    for (double e : custom)
      if (!(e >= 0.0) || !std::isfinite(e))
        throw ConfigError("custom schedule: steps must be finite and >= 0");
    return;
  }
  if (!(eta0 >= 0.0) || !std::isfinite(eta0))
    throw ConfigError("eta0 must be finite and >= 0");
  if (iters_per_epoch < 1) throw ConfigError("iters_per_epoch must be >= 1");
}

void SolverConfig::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw ConfigError("beta must be finite and > 0");
  schedule.validate();
  if (max_iters < 0) throw ConfigError("max_iters must be >= 0");
  if (trace_stride < 0) throw ConfigError("trace_stride must be >= 0");
  if (stop_check_every < 0) throw ConfigError("stop_check_every must be >= 0");
}

const char* algorithm_name(Algorithm algo) {
  switch (algo) {
    case Algorithm::kNcdfSgd: return "ncdf_sgd";
    case Algorithm::kNcdfProxSgd: return "ncdf_proxsgd";
    case Algorithm::kRsgdBaseline: return "rsgd_baseline";
  }
  return "unknown";
}

std::optional<Algorithm> parse_algorithm(const std::string& name) {
  if (name == "ncdf_sgd") return Algorithm::kNcdfSgd;
  if (name == "ncdf_proxsgd") return Algorithm::kNcdfProxSgd;
  if (name == "rsgd_baseline") return Algorithm::kRsgdBaseline;
  return std::nullopt;
}

const char* termination_name(Termination t) {
  switch (t) {
    case Termination::kMaxIters: return "max_iters";
    case Termination::kTolMet: return "tol_met";
    case Termination::kDivergenceGuard: return "divergence_guard";
  }
  return "unknown";
}

double safeguard_beta(const ConstantEstimates& m) {
  return std::max({16.0 * m.m1, 60.0 * m.m_tilde, 16.0 * m.m_hat});
}

double safeguard_step_sgd(double beta) { return 1.0 / (2.0 * beta); }

double safeguard_step_prox(const ConstantEstimates& m, double m_r) {
  // D_k is a raw phi-oracle output; the larger of the two sampled oracle
  // bounds is used.
  const double m_d = std::max(m.m_tilde, m.m_hat);
  return 1.0 / (19.0 * (m_d + m_r));
}

Matrix subgradient_step(const Matrix& x, const Matrix& d, double eta,
                        double beta) {
  if (d.rows() != x.rows() || d.cols() != x.cols())
    throw DimensionError("subgradient_step: X and D must have the same shape");
  if (!(eta >= 0.0)) throw ValidationError("subgradient_step: eta < 0");
  const Eigen::Index p = x.cols();
  const Matrix g = x.transpose() * x;
  Matrix next = x - eta * (d + beta * x * (sym(g) - Matrix::Identity(p, p)));
  if (!next.allFinite())
    throw DivergenceError("subgradient_step: non-finite iterate");
  return next;
}

Matrix prox_subgradient_step(const Matrix& x, const Matrix& d, double eta,
                             const Regularizer* reg) {
  if (d.rows() != x.rows() || d.cols() != x.cols())
    throw DimensionError("prox_subgradient_step: X and D must have the same shape");
  if (!(eta >= 0.0)) throw ValidationError("prox_subgradient_step: eta < 0");
  Matrix z = apply_A(x) - eta * d;
  if (reg) z = reg->prox(z, eta);
  if (!z.allFinite())
    throw DivergenceError("prox_subgradient_step: non-finite iterate");
  return z;
}

double stationarity_estimate(const ProblemDefinition& problem,
                             const StiefelPoint& x) {
  const Matrix& m = x.matrix();
  return tangent_project(m, problem.exact_subgradient(m)).norm();
}

double ncdf_value(const ProblemDefinition& problem, const Matrix& x,
                  double beta) {
  return ncdf_value([&problem](const Matrix& y) { return problem.value(y); }, x,
                    PenaltyConfig(beta));
}

SolverResult run_subgradient(const ProblemDefinition& problem,
                             const SolverConfig& cfg) {
  cfg.validate();
  if (cfg.feas_shell_check) check_sgd_safeguards(cfg);
  const double beta = cfg.beta;
  auto step = [&problem, beta](const Matrix& x, double eta, Rng& rng) {
    const Matrix w = problem.subgradient(apply_A(x), rng);
    return subgradient_step(x, jacobian_apply(x, w), eta, beta);
  };
  return drive(problem, cfg, Algorithm::kNcdfSgd, step, {});
}

SolverResult run_prox_subgradient(const ProblemDefinition& problem,
                                  const SolverConfig& cfg) {
  cfg.validate();
  if (!problem.reg)
    throw ConfigError("ncdf_proxsgd needs a problem with a prox-friendly regularizer");
  const Regularizer& reg = *problem.reg;
  if (cfg.feas_shell_check) {
    const double cap = safeguard_step_prox(cfg.safeguards, reg.lipschitz);
    if (cfg.schedule.max_step() > cap)
      throw SafeguardViolation("step " + fmt(cfg.schedule.max_step()) +
                               " exceeds 1/(19*(M_tilde + M_r)) = " + fmt(cap));
  }
  auto step = [&problem, &reg](const Matrix& x, double eta, Rng& rng) {
    const Matrix d = problem.phi_subgrad(x, rng);
    return prox_subgradient_step(x, d, eta, &reg);
  };
  const double beta = cfg.beta;
  auto merit = [&problem, beta](const Matrix& x) {
    return ncdf_value(problem, apply_A(x), beta);
  };
  return drive(problem, cfg, Algorithm::kNcdfProxSgd, step, merit);
}

SolverResult run_riemannian_baseline(const ProblemDefinition& problem,
                                     const SolverConfig& cfg) {
  cfg.validate();
  if (cfg.x0 && feasibility_violation(*cfg.x0) > 1e-10)
    throw ConfigError("rsgd_baseline needs a feasible initial point");
  auto step = [&problem](const Matrix& x, double eta, Rng& rng) {
    const Matrix w = problem.subgradient(x, rng);
    Matrix moved = x - eta * tangent_project(x, w);
    if (!moved.allFinite())
      throw DivergenceError("rsgd_baseline: non-finite iterate");
    return project_stiefel(moved).matrix();
  };
  return drive(problem, cfg, Algorithm::kRsgdBaseline, step, {});
}

SolverResult run_solver(Algorithm algo, const ProblemDefinition& problem,
                        const SolverConfig& cfg) {
  switch (algo) {
    case Algorithm::kNcdfSgd: return run_subgradient(problem, cfg);
    case Algorithm::kNcdfProxSgd: return run_prox_subgradient(problem, cfg);
    case Algorithm::kRsgdBaseline: return run_riemannian_baseline(problem, cfg);
  }
  throw ConfigError("unknown algorithm");
}

std::array<double, 10> eta0_grid() {
  // k1 * 10^-k2 for k1 in {1,3,5,7,9}, k2 in {1,2}, written out so each
  // entry is the nearest double to its decimal.
  return {0.01, 0.03, 0.05, 0.07, 0.09, 0.1, 0.3, 0.5, 0.7, 0.9};
}

GridResult grid_search_eta0(const ProblemDefinition& problem,
                            const SolverConfig& cfg_template,
                            int budget_epochs, Algorithm algo,
                            unsigned workers) {
  if (budget_epochs < 1) throw ConfigError("budget_epochs must be >= 1");
  const auto grid = eta0_grid();
  GridResult out;
  out.entries.resize(grid.size());

  const long iters =
      static_cast<long>(budget_epochs) *
      std::max(1, cfg_template.schedule.iters_per_epoch);
  auto run_one = [&](std::size_t i) {
    SolverConfig cfg = cfg_template;
    cfg.schedule.eta0 = grid[i];
    if (cfg.schedule.kind == ScheduleKind::kCustom)
      cfg.schedule.kind = ScheduleKind::kHarmonicDecay;
    cfg.max_iters = iters;
    cfg.trace_stride = 0;
    cfg.stop_check_every = 0;
    GridEntry e;
    e.eta0 = grid[i];
    try {
      const SolverResult r = run_solver(algo, problem, cfg);
      e.diverged = r.reason == Termination::kDivergenceGuard;
      e.final_f = problem.value(r.projected.matrix());
      if (!std::isfinite(e.final_f)) e.diverged = true;
    } catch (const DivergenceError&) {
      e.diverged = true;
    } catch (const SafeguardViolation&) {
      e.diverged = true;
    }
    out.entries[i] = e;
  };

  unsigned cap = workers ? workers : std::max(1u, std::thread::hardware_concurrency());
  cap = std::min<unsigned>(cap, static_cast<unsigned>(grid.size()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      try {
        run_one(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < cap; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  bool found = false;
  double best = 0.0;
  for (const auto& e : out.entries) {
    if (e.diverged) continue;
    // Strict comparison in increasing-step order keeps the smaller step on ties.
    if (!found || e.final_f < best) {
      best = e.final_f;
      out.selected = e.eta0;
      found = true;
    }
  }
  if (!found) throw NumericalError("grid search: every candidate diverged");
  return out;
}

}  // namespace cdf
