#pragma once

// Run configuration: flat `key = value` text, one entry per line, `#` starts
// a comment. Relative paths are resolved against the config file's
// directory. See README.md for the key reference.

#include "cdf/problems.hpp"
#include "cdf/solvers.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cdf {

struct ProblemSpec {
  std::string kind;  ///< quadratic_trace | sparse_pca | l1_pca | zero
  Eigen::Index n = 0;
  Eigen::Index p = 0;
  /// quadratic_trace only: A = diag(values).
  std::vector<double> diag;
  /// Matrix file (A, Sigma, or the l1-PCA data matrix).
  std::optional<std::filesystem::path> data;
  /// Synthetic instance seed, used when neither diag nor data is given.
  std::uint64_t data_seed = 0;
  /// l1_pca synthetic data rows; 0 means 2 n.
  Eigen::Index rows = 0;
  /// l1 weight (required for sparse_pca, optional for l1_pca).
  std::optional<double> gamma;
  double noise_sigma = 0.0;
  double noise_bound = 0.0;
  std::optional<std::uint64_t> noise_seed;
};

struct RunConfig {
  ProblemSpec problem;
  Algorithm algorithm = Algorithm::kNcdfSgd;
  SolverConfig solver;
  /// beta = auto: take the safeguard formula from sampled constants.
  bool beta_auto = false;
  int constant_samples = 200;
  std::filesystem::path output = "trace.csv";
  /// Defaults to <output>.summary.json.
  std::optional<std::filesystem::path> summary;
  int budget_epochs = 0;
  unsigned workers = 0;

  std::filesystem::path summary_path() const;
};

/// Assigns one solver field from its textual value. Throws ConfigError
/// naming the field on unknown keys or out-of-range values.
void set_solver_field(SolverConfig& cfg, const std::string& key,
                      const std::string& value);

/// Parses config text. `origin` prefixes error messages ("file:line").
/// Throws ConfigError with line and field context.
RunConfig parse_run_config(const std::string& text, const std::string& origin,
                           const std::filesystem::path& base_dir = {});

RunConfig load_run_config(const std::filesystem::path& path);

/// Builds the problem described by the config (data files are read here).
ProblemDefinition build_problem(const RunConfig& config);

/// Problem plus solver config with safeguard constants filled in when the
/// shell check or beta = auto asks for them.
struct PreparedRun {
  ProblemDefinition problem;
  SolverConfig solver;
};
PreparedRun prepare_run(const RunConfig& config);

}  // namespace cdf
