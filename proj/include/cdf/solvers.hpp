#pragma once

// Subgradient solvers built on the constraint dissolving penalty:
//
//  * run_subgradient       X+ = X - eta (J_A(X)[W] + beta X (X^T X - I)),
//                          W a (stochastic) subgradient of f at A(X);
//  * run_prox_subgradient  X+ = prox_{eta r}(A(X) - eta D), D a stochastic
//                          subgradient of phi at X, for f = phi + r;
//  * run_riemannian_baseline
//                          X+ = P_St(X - eta (W - X sym(X^T W))), the polar
//                          retraction Riemannian subgradient method.
//
// Every run is deterministic given (problem, config, seed): the per-iteration
// random stream is derived from (seed, iteration index).

#include "cdf/core.hpp"
#include "cdf/problems.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace cdf {

enum class ScheduleKind { kHarmonicDecay, kConstant, kCustom };

/// eta_k = eta0 / (0.1 * floor(k / iters_per_epoch) + 1) for harmonic decay.
/// A custom list is indexed by iteration and its last entry repeats.
struct StepSchedule {
  ScheduleKind kind = ScheduleKind::kHarmonicDecay;
  double eta0 = 1e-2;
  int iters_per_epoch = 1;
  std::vector<double> custom;

  double at(long k) const;
  /// sup_k eta_k
  double max_step() const;
  void validate() const;
};

enum class Algorithm { kNcdfSgd, kNcdfProxSgd, kRsgdBaseline };

const char* algorithm_name(Algorithm algo);
std::optional<Algorithm> parse_algorithm(const std::string& name);

struct SolverConfig {
  double beta = 0.1;
  StepSchedule schedule;
  long max_iters = 1000;
  /// Enforce the penalty and step safeguards and verify every iterate stays
  /// in Omega_{1/6}.
  bool feas_shell_check = false;
  /// Constants used by the safeguards, already inflated.
  ConstantEstimates safeguards;
  std::uint64_t seed = 0;
  double stop_tol_stationarity = 1e-6;
  double stop_tol_feasibility = 1e-8;
  long stop_check_every = 10;
  long trace_stride = 1;
  bool record_time = true;
  /// Initial point; a projected Gaussian drawn from `seed` when absent.
  std::optional<Matrix> x0;

  void validate() const;
};

/// beta = max{16 M1, 60 M~, 16 M^}
double safeguard_beta(const ConstantEstimates& inflated);
/// 1 / (2 beta)
double safeguard_step_sgd(double beta);
/// 1 / (19 (M + M_r)), M bounding the phi oracle outputs.
double safeguard_step_prox(const ConstantEstimates& inflated, double m_r);

struct IterateRecord {
  long iter = 0;
  /// f at the projected iterate P_St(X_k).
  double f = 0.0;
  /// Merit value: h(X_k), or h(A(X_k)) for the proximal method.
  double h = 0.0;
  /// h(X_k) for every algorithm.
  double h_iterate = 0.0;
  double feas = 0.0;
  double stat = 0.0;
  double seconds = 0.0;
};

using IterateTrace = std::vector<IterateRecord>;

enum class Termination { kMaxIters, kTolMet, kDivergenceGuard };
const char* termination_name(Termination t);

struct SolverResult {
  Matrix final_x;
  StiefelPoint projected;
  IterateTrace trace;
  Termination reason = Termination::kMaxIters;
  long iterations = 0;
  double seconds = 0.0;
  Algorithm algorithm = Algorithm::kNcdfSgd;
};

/// X - eta (D + beta X (X^T X - I)). Throws DivergenceError on non-finite output.
Matrix subgradient_step(const Matrix& x, const Matrix& d, double eta,
                        double beta);

/// prox_{eta r}(A(X) - eta D); r == 0 when `reg` is empty.
Matrix prox_subgradient_step(const Matrix& x, const Matrix& d, double eta,
                             const Regularizer* reg);

/// ||W - X sym(X^T W)||_F for the noise-free oracle element W at X.
double stationarity_estimate(const ProblemDefinition& problem,
                             const StiefelPoint& x);

/// h(X) = f(A(X)) + (beta/4) ||X^T X - I||^2 for f = phi + r.
double ncdf_value(const ProblemDefinition& problem, const Matrix& x,
                  double beta);

SolverResult run_subgradient(const ProblemDefinition& problem,
                             const SolverConfig& cfg);
SolverResult run_prox_subgradient(const ProblemDefinition& problem,
                                  const SolverConfig& cfg);
SolverResult run_riemannian_baseline(const ProblemDefinition& problem,
                                     const SolverConfig& cfg);
SolverResult run_solver(Algorithm algo, const ProblemDefinition& problem,
                        const SolverConfig& cfg);

/// {k1 * 10^-k2 : k1 = 1,3,5,7,9, k2 = 1,2} in increasing order.
std::array<double, 10> eta0_grid();

struct GridEntry {
  double eta0 = 0.0;
  double final_f = 0.0;
  bool diverged = false;
};

struct GridResult {
  std::vector<GridEntry> entries;  ///< in grid order
  double selected = 0.0;
};

/// Runs every grid candidate for `budget_epochs` epochs with the template's
/// seed (and hence the same initial point) and picks the smallest final
/// objective at the projected point; ties go to the smaller step. Candidates
/// run concurrently on up to `workers` threads (0 = hardware concurrency).
GridResult grid_search_eta0(const ProblemDefinition& problem,
                            const SolverConfig& cfg_template,
                            int budget_epochs, Algorithm algo,
                            unsigned workers = 0);

}  // namespace cdf
