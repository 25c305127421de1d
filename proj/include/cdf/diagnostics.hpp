#pragma once

// Executable verification suite for the identities and bounds the solvers
// rely on. Failures are reported, never thrown.

#include "cdf/problems.hpp"

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace cdf {

struct CheckReport {
  std::string name;
  int samples = 0;
  double max_violation = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::uint64_t seed = 0;
};

/// Names of the checks run by run_identity_suite, one per kernel property.
inline constexpr std::array<std::string_view, 12> kIdentityChecks = {
    "fixed_point",          // A(X) = X on S(n,p)
    "ata_factorization",    // A^T A - I = (G-I)^3 (9G^2 - 33G + 64I) / 64
    "cubic_bound",          // ||A^T A - I|| <= ||X^T X - I||^3 on Omega_1
    "jacobian_fd",          // J_A against central differences
    "jacobian_on_manifold", // J_A(X)[D] = D - X sym(D^T X) for feasible X
    "self_adjoint",         // <J[D], W> = <D, J[W]>
    "normal_component",     // <J[W], X(G-I)> = 15/8 <sym(X^T W), (G-I)^3>
    "inverse_roundtrip",    // A^{-1}(A(X)) = X
    "projection_distance",  // ||X - P(X)|| <= ||X^T X - I||
    "projection_cubic",     // ||A(X) - P(X)|| <= 4 ||X^T X - I||^3 on Omega_1/2
    "stationarity_bound",   // ||grad h|| >= beta/4 ||X^T X - I|| (smooth f)
    "projection_descent",   // h(P(X)) <= h(X) near the manifold
};

struct SuiteOptions {
  /// Multiplies every tolerance; 1 for double-precision builds.
  double tolerance_scale = 1.0;
  /// Run independent checks on separate threads.
  bool parallel = true;
};

/// Every kernel check above on `samples` seeded inputs each (dims n <= 20,
/// p <= 5). Throws ValidationError when samples < 1.
std::vector<CheckReport> run_identity_suite(std::uint64_t seed, int samples,
                                            const SuiteOptions& opts = {});

/// Stationarity lower bound and projection descent for a smooth problem at
/// penalty `beta`, sampled in Omega_r with r = 0.9 beta / (2 beta + 8 M1).
/// Throws ConfigError for nonsmooth problems.
std::vector<CheckReport> run_stationarity_suite(const ProblemDefinition& problem,
                                                double beta, std::uint64_t seed,
                                                int samples,
                                                const SuiteOptions& opts = {});

/// The seeded quadratic trace instance used by the identity suite for the two
/// smooth-objective checks, together with its safeguarded beta.
struct StationarityInstance {
  ProblemDefinition problem;
  double beta = 0.0;
  double m1 = 0.0;
};
StationarityInstance default_stationarity_instance(std::uint64_t seed);

struct SphereOptimum {
  double angle = 0.0;
  double value = 0.0;
};

/// Evaluates f((cos t, sin t)) on `grid_steps` equispaced angles in [0, 2 pi)
/// and returns the first minimizer. Needs n = 2, p = 1.
SphereOptimum brute_force_sphere_oracle(const ProblemDefinition& problem,
                                        int grid_steps);

/// One JSON object per line.
std::string format_report(const CheckReport& report);

bool all_pass(const std::vector<CheckReport>& reports);

}  // namespace cdf
