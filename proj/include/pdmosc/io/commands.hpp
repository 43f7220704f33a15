#ifndef PDMOSC_IO_COMMANDS_HPP
#define PDMOSC_IO_COMMANDS_HPP

#include <iosfwd>
#include <string>

#include "pdmosc/io/run_config.hpp"

namespace pdmosc::io {

/// Exit codes shared by the CLI and the in-process command API.
enum ExitCode : int {
    exit_ok = 0,
    exit_validation = 2,      // config parse/schema/model-invariant failure
    exit_solver = 3,          // classical solver failure
    exit_admissibility = 4,   // quantum bound-state condition violated
};

void cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& diag);
void cmd_period_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& diag);
void cmd_spectrum(const RunConfig& cfg, std::ostream& out, std::ostream& diag);
void cmd_eigensolve(const RunConfig& cfg, std::ostream& out, std::ostream& diag);
void cmd_wavefunction(const RunConfig& cfg, std::ostream& out, std::ostream& diag);
void cmd_phase_portrait(const RunConfig& cfg, std::ostream& out, std::ostream& diag);
void cmd_linearize_check(const RunConfig& cfg, std::ostream& out, std::ostream& diag);

/// Dispatch by subcommand name ("period-sweep" and "period_sweep" both work)
/// and map exceptions to exit codes, writing the diagnostic to `diag`.
int run_command(const std::string& command, const RunConfig& cfg, std::ostream& out,
                std::ostream& diag);

}  // namespace pdmosc::io

#endif  // PDMOSC_IO_COMMANDS_HPP
