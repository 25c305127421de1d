#include "cdf/commands.hpp"

#include "cdf/run_config.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>

namespace cdf {

namespace {

// Shortest representation that parses back to the same double.
std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void open_for_write(std::ofstream& f, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  f.open(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("cannot write '" + path.string() + "'");
}

/// Maps exceptions escaping a command onto the exit-code contract.
template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ValidationError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DimensionError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const SafeguardViolation& e) {
    err << "safeguard violation: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const DivergenceError& e) {
    err << "divergence: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace

void write_trace_csv(const IterateTrace& trace, std::ostream& out) {
  out << "iter,f,h,feas,stat,seconds\n";
  for (const auto& r : trace)
    out << r.iter << ',' << num(r.f) << ',' << num(r.h) << ',' << num(r.feas)
        << ',' << num(r.stat) << ',' << num(r.seconds) << '\n';
}

std::string summary_json(const SolverResult& result,
                         const ProblemDefinition& problem) {
  nlohmann::ordered_json j;
  j["algorithm"] = algorithm_name(result.algorithm);
  j["termination"] = termination_name(result.reason);
  j["final_f"] = problem.value(result.projected.matrix());
  j["final_feasibility"] = feasibility_violation(result.final_x);
  j["projected_feasibility"] = feasibility_violation(result.projected.matrix());
  j["stationarity"] = stationarity_estimate(problem, result.projected);
  j["iterations"] = result.iterations;
  j["seconds"] = result.seconds;
  return j.dump();
}

int cmd_run(const std::filesystem::path& config, std::ostream& out,
            std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig rc = load_run_config(config);
    const PreparedRun run = prepare_run(rc);
    const SolverResult result = run_solver(rc.algorithm, run.problem, run.solver);

    std::ofstream trace;
    open_for_write(trace, rc.output);
    write_trace_csv(result.trace, trace);
    const std::string summary = summary_json(result, run.problem);
    std::ofstream sum;
    open_for_write(sum, rc.summary_path());
    sum << summary << '\n';
    out << summary << '\n';

    if (result.reason == Termination::kDivergenceGuard) {
      err << "divergence guard tripped after " << result.iterations
          << " iterations\n";
      return static_cast<int>(kExitDivergence);
    }
    return static_cast<int>(kExitOk);
  });
}

int cmd_verify(std::uint64_t seed, int samples, std::ostream& out,
               std::ostream& err) {
  return guarded(err, [&] {
    const auto reports = run_identity_suite(seed, samples);
    std::string failed;
    for (const auto& r : reports) {
      out << format_report(r) << '\n';
      if (!r.pass) failed += (failed.empty() ? "" : ", ") + r.name;
    }
    if (!failed.empty()) {
      err << "verify: failing checks: " << failed << "\n";
      return static_cast<int>(kExitVerifyFailed);
    }
    err << "verify: all " << reports.size() << " checks passed\n";
    return static_cast<int>(kExitOk);
  });
}

int cmd_grid(const std::filesystem::path& config, std::ostream& out,
             std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig rc = load_run_config(config);
    if (rc.budget_epochs < 1)
      throw ConfigError(config.string() + ": missing required field 'budget_epochs'");
    const PreparedRun run = prepare_run(rc);
    const GridResult grid = grid_search_eta0(run.problem, run.solver,
                                             rc.budget_epochs, rc.algorithm,
                                             rc.workers);
    out << "eta0,final_f\n";
    for (const auto& e : grid.entries)
      out << num(e.eta0) << ',' << (e.diverged ? std::string("diverged") : num(e.final_f))
          << '\n';
    out << "selected eta0 = " << num(grid.selected) << '\n';
    return static_cast<int>(kExitOk);
  });
}

}  // namespace cdf
