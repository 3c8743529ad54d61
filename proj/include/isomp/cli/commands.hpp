#pragma once

#include "isomp/cli/run_config.hpp"

#include <iosfwd>
#include <string>

namespace isomp::cli {

enum ExitCode : int { kSuccess = 0, kUnexpected = 1, kConfigError = 2, kIntegratorFailure = 3 };

/// step,t,hamiltonian_rel_drift,enstrophy_rel_drift,max_eig_drift,fp_iters; with
/// dump_state the flattened states go to <out>.state.csv.
void cmd_simulate(const RunConfig& cfg, std::ostream& out);

/// h,error,stderr,terminal_error,terminal_stderr rows and a closing "slope" row.
void cmd_converge(const RunConfig& cfg, bool strong, std::ostream& out);

nlohmann::json models_listing();

/// Locale-independent shortest-round-trip-safe rendering with 17 significant digits.
std::string format_number(double x);

/// Full command-line entry point; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace isomp::cli
