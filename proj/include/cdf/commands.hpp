#pragma once

// Subcommands behind the command-line front end. Each returns a process exit
// code and writes human/machine output to the given streams.

#include "cdf/diagnostics.hpp"
#include "cdf/solvers.hpp"

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>

namespace cdf {

enum ExitCode : int {
  kExitOk = 0,
  kExitVerifyFailed = 1,
  kExitDivergence = 2,
  kExitConfig = 3,
};

/// Trace CSV with header iter,f,h,feas,stat,seconds; values are printed in
/// shortest round-trip form.
void write_trace_csv(const IterateTrace& trace, std::ostream& out);

/// One JSON object: final f, feasibility, stationarity, iterations, seconds.
std::string summary_json(const SolverResult& result,
                         const ProblemDefinition& problem);

int cmd_run(const std::filesystem::path& config, std::ostream& out,
            std::ostream& err);
int cmd_verify(std::uint64_t seed, int samples, std::ostream& out,
               std::ostream& err);
int cmd_grid(const std::filesystem::path& config, std::ostream& out,
             std::ostream& err);

}  // namespace cdf
