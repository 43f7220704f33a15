#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pdmosc/io/commands.hpp"
#include "pdmosc/io/run_config.hpp"

namespace {

struct SubArgs {
    std::string config_path;
    std::string out_path;
    std::vector<std::string> overrides;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pdmosc: classical and quantum toolkit for the singular "
                 "position-dependent-mass isochronous oscillator"};
    app.require_subcommand(1);

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"simulate", "integrate the equation of motion and emit t,x,xdot,p,H as CSV"},
        {"period-sweep", "measure the oscillation period over a list of energies"},
        {"spectrum", "analytic vs numeric energy levels and gaps as a JSON report"},
        {"eigensolve", "run the grid eigensolvers and emit levels with error estimates"},
        {"wavefunction", "tabulate V_eff, phi_n(xi) and psi_n(x) as CSV"},
        {"phase-portrait", "sample bounded orbits in the (x, xdot) plane"},
        {"linearize-check", "residual of the nonlocal map onto the harmonic oscillator"},
    };

    std::map<std::string, SubArgs> args;
    for (const auto& [name, description] : commands) {
        CLI::App* sub = app.add_subcommand(name, description);
        SubArgs& a = args[name];
        sub->add_option("--config", a.config_path, "JSON config file")->required();
        sub->add_option("--out", a.out_path, "output path (default: stdout)");
        sub->add_option("--set", a.overrides,
                        "config override key.path=value (repeatable; overrides win)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return pdmosc::io::exit_validation;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    const SubArgs& a = args[name];

    int code = pdmosc::io::exit_ok;
    try {
        const pdmosc::io::RunConfig cfg = pdmosc::io::load_run_config(a.config_path, a.overrides);
        if (a.out_path.empty()) {
            code = pdmosc::io::run_command(name, cfg, std::cout, std::cerr);
        } else {
            std::ofstream out(a.out_path, std::ios::binary);
            if (!out) {
                std::cerr << "error: cannot open output file '" << a.out_path << "'\n";
                return pdmosc::io::exit_validation;
            }
            code = pdmosc::io::run_command(name, cfg, out, std::cerr);
        }
    } catch (const pdmosc::io::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return pdmosc::io::exit_validation;
    } catch (const std::exception& e) {  // malformed documents and the like
        std::cerr << "error: " << e.what() << '\n';
        return pdmosc::io::exit_validation;
    }
    return code;
}
