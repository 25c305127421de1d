#include "cdf/run_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace cdf {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_field(const std::string& key, const std::string& what,
                            const std::string& value) {
  throw ConfigError("field '" + key + "': " + what + " (got '" + value + "')");
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || !std::isfinite(out))
    bad_field(key, "expected a finite number", v);
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_field(key, "expected an integer", v);
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end)
    bad_field(key, "expected a non-negative integer", v);
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "off" || v == "no" || v == "0") return false;
  bad_field(key, "expected true/false or on/off", v);
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
  if (out.empty()) bad_field(key, "expected a comma-separated list", v);
  return out;
}

double nonneg(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  if (x < 0.0) bad_field(key, "must be >= 0", v);
  return x;
}

double positive(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  if (!(x > 0.0)) bad_field(key, "must be > 0", v);
  return x;
}

long long at_least(const std::string& key, const std::string& v, long long lo) {
  const long long x = to_int(key, v);
  if (x < lo) bad_field(key, "must be >= " + std::to_string(lo), v);
  return x;
}

const std::set<std::string> kSolverKeys = {
    "beta",          "eta0",          "schedule",
    "steps",         "iters_per_epoch", "max_iters",
    "seed",          "feas_shell_check", "stop_tol_stationarity",
    "stop_tol_feasibility", "stop_check_every", "trace_stride",
    "timing"};

}  // namespace

std::filesystem::path RunConfig::summary_path() const {
  if (summary) return *summary;
  std::filesystem::path s = output;
  s += ".summary.json";
  return s;
}

void set_solver_field(SolverConfig& cfg, const std::string& key,
                      const std::string& value) {
  if (key == "beta") {
    cfg.beta = positive(key, value);
  } else if (key == "eta0") {
    cfg.schedule.eta0 = nonneg(key, value);
  } else if (key == "schedule") {
    if (value == "harmonic") cfg.schedule.kind = ScheduleKind::kHarmonicDecay;
    else if (value == "constant") cfg.schedule.kind = ScheduleKind::kConstant;
    else if (value == "custom") cfg.schedule.kind = ScheduleKind::kCustom;
    else bad_field(key, "expected harmonic, constant or custom", value);
  } else if (key == "steps") {
    cfg.schedule.custom = to_list(key, value);
    for (double s : cfg.schedule.custom)
      if (s < 0.0) bad_field(key, "steps must be >= 0", value);
  } else if (key == "iters_per_epoch") {
    cfg.schedule.iters_per_epoch = static_cast<int>(at_least(key, value, 1));
  } else if (key == "max_iters") {
    cfg.max_iters = static_cast<long>(at_least(key, value, 0));
  } else if (key == "seed") {
    cfg.seed = to_u64(key, value);
  } else if (key == "feas_shell_check") {
    cfg.feas_shell_check = to_bool(key, value);
  } else if (key == "stop_tol_stationarity") {
    cfg.stop_tol_stationarity = nonneg(key, value);
  } else if (key == "stop_tol_feasibility") {
    cfg.stop_tol_feasibility = nonneg(key, value);
  } else if (key == "stop_check_every") {
    cfg.stop_check_every = static_cast<long>(at_least(key, value, 0));
  } else if (key == "trace_stride") {
    cfg.trace_stride = static_cast<long>(at_least(key, value, 0));
  } else if (key == "timing") {
    cfg.record_time = to_bool(key, value);
  } else {
    throw ConfigError("unknown field '" + key + "'");
  }
}

RunConfig parse_run_config(const std::string& text, const std::string& origin,
                           const std::filesystem::path& base_dir) {
  RunConfig rc;
  auto resolve = [&base_dir](const std::string& v) {
    std::filesystem::path p(v);
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };
  std::map<std::string, int> seen;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string where = origin + ":" + std::to_string(line_no) + ": ";
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "missing key before '='");
    if (value.empty())
      throw ConfigError(where + "field '" + key + "': missing value");
    if (auto it = seen.find(key); it != seen.end())
      throw ConfigError(where + "field '" + key + "': already set on line " +
                        std::to_string(it->second));
    seen[key] = line_no;

    try {
      ProblemSpec& ps = rc.problem;
      if (key == "problem") {
        if (value != "quadratic_trace" && value != "sparse_pca" &&
            value != "l1_pca" && value != "zero")
          bad_field(key, "expected quadratic_trace, sparse_pca, l1_pca or zero",
                    value);
        ps.kind = value;
      } else if (key == "n") {
        ps.n = static_cast<Eigen::Index>(at_least(key, value, 1));
      } else if (key == "p") {
        ps.p = static_cast<Eigen::Index>(at_least(key, value, 1));
      } else if (key == "diag") {
        ps.diag = to_list(key, value);
      } else if (key == "data") {
        ps.data = resolve(value);
      } else if (key == "data_seed") {
        ps.data_seed = to_u64(key, value);
      } else if (key == "rows") {
        ps.rows = static_cast<Eigen::Index>(at_least(key, value, 1));
      } else if (key == "gamma") {
        ps.gamma = nonneg(key, value);
      } else if (key == "noise_sigma") {
        ps.noise_sigma = nonneg(key, value);
      } else if (key == "noise_bound") {
        ps.noise_bound = nonneg(key, value);
      } else if (key == "noise_seed") {
        ps.noise_seed = to_u64(key, value);
      } else if (key == "algorithm") {
        const auto a = parse_algorithm(value);
        if (!a) bad_field(key, "expected ncdf_sgd, ncdf_proxsgd or rsgd_baseline", value);
        rc.algorithm = *a;
      } else if (key == "beta" && value == "auto") {
        rc.beta_auto = true;
      } else if (key == "constant_samples") {
        rc.constant_samples = static_cast<int>(at_least(key, value, 1));
      } else if (key == "output") {
        rc.output = resolve(value);
      } else if (key == "summary") {
        rc.summary = resolve(value);
      } else if (key == "budget_epochs") {
        rc.budget_epochs = static_cast<int>(at_least(key, value, 1));
      } else if (key == "workers") {
        rc.workers = static_cast<unsigned>(at_least(key, value, 0));
      } else if (kSolverKeys.count(key)) {
        set_solver_field(rc.solver, key, value);
      } else {
        throw ConfigError("unknown field '" + key + "'");
      }
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }

  const std::string where = origin + ": ";
  const ProblemSpec& ps = rc.problem;
  if (ps.kind.empty()) throw ConfigError(where + "missing required field 'problem'");
  if (ps.p == 0) throw ConfigError(where + "missing required field 'p'");
  if (!ps.diag.empty() && ps.kind != "quadratic_trace")
    throw ConfigError(where + "field 'diag': only valid for quadratic_trace");
  if (ps.kind == "sparse_pca" && !ps.gamma)
    throw ConfigError(where + "missing required field 'gamma' for sparse_pca");
  const bool sized = ps.n > 0 || !ps.diag.empty() || ps.data;
  if (!sized) throw ConfigError(where + "missing required field 'n'");
  if (ps.kind == "zero" && ps.n == 0)
    throw ConfigError(where + "missing required field 'n' for zero");
  if (rc.algorithm == Algorithm::kNcdfProxSgd && ps.kind != "sparse_pca" &&
      !ps.gamma)
    throw ConfigError(where + "ncdf_proxsgd needs a regularizer: set 'gamma'");
  try {
    rc.solver.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(where + e.what());
  }
  return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.string(), path.parent_path());
}

ProblemDefinition build_problem(const RunConfig& config) {
  const ProblemSpec& ps = config.problem;
  auto check_n = [&ps](Eigen::Index n) {
    if (ps.n > 0 && ps.n != n)
      throw ConfigError("field 'n': " + std::to_string(ps.n) +
                        " does not match the data dimension " + std::to_string(n));
  };
  auto load = [&ps]() {
    try {
      return load_dense_csv(ps.data->string());
    } catch (const Error& e) {
      throw ConfigError(std::string("field 'data': ") + e.what());
    }
  };

  ProblemDefinition problem;
  try {
    if (ps.kind == "quadratic_trace") {
      Matrix a;
      if (!ps.diag.empty()) {
        a = Eigen::Map<const Vector>(ps.diag.data(),
                                     static_cast<Eigen::Index>(ps.diag.size()))
                .asDiagonal();
      } else if (ps.data) {
        a = load();
      } else {
        Rng rng = make_rng(ps.data_seed, 0xDA7A);
        const Matrix g = gaussian_matrix(ps.n, ps.n, rng);
        a = (g + g.transpose()) / 2.0;
      }
      check_n(a.rows());
      problem = make_quadratic_trace(a, ps.p);
      if (ps.gamma) problem = attach_l1_regularizer(std::move(problem), *ps.gamma);
    } else if (ps.kind == "sparse_pca") {
      Matrix sigma = ps.data ? load()
                             : synthetic_sparse_covariance(ps.n, ps.p, ps.data_seed);
      check_n(sigma.rows());
      problem = make_sparse_pca(sigma, *ps.gamma, ps.p);
    } else if (ps.kind == "l1_pca") {
      Matrix a;
      if (ps.data) {
        a = load();
      } else {
        const Eigen::Index rows = ps.rows > 0 ? ps.rows : 2 * ps.n;
        a = synthetic_gaussian(rows, ps.n, ps.data_seed);
      }
      check_n(a.cols());
      problem = make_l1_pca(a, ps.p);
      if (ps.gamma) problem = attach_l1_regularizer(std::move(problem), *ps.gamma);
    } else {
      problem = make_zero(ps.n, ps.p);
      if (ps.gamma) problem = attach_l1_regularizer(std::move(problem), *ps.gamma);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("problem '") + ps.kind + "': " + e.what());
  }

  if (ps.noise_sigma > 0.0) {
    NoiseModel noise;
    noise.sigma = ps.noise_sigma;
    noise.bound = ps.noise_bound;
    noise.seed = ps.noise_seed.value_or(config.solver.seed);
    problem = attach_noise(std::move(problem), noise);
  }
  return problem;
}

PreparedRun prepare_run(const RunConfig& config) {
  PreparedRun run{build_problem(config), config.solver};
  if (run.solver.feas_shell_check || config.beta_auto) {
    const ConstantEstimates est =
        estimate_constants(run.problem, config.constant_samples, run.solver.seed)
            .inflated();
    run.solver.safeguards = est;
    if (config.beta_auto) run.solver.beta = safeguard_beta(est);
  }
  return run;
}

}  // namespace cdf
