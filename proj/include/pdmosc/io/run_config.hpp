#ifndef PDMOSC_IO_RUN_CONFIG_HPP
#define PDMOSC_IO_RUN_CONFIG_HPP

#include <json.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pdmosc/model.hpp"

namespace pdmosc::io {

/// Config document failed validation; the message carries the key path.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Grid override for the spectral solvers; zeros mean "use the solver
/// default for this configuration".
struct GridSpec {
    double length = 0.0;
    long n_points = 0;
};

struct SimulateSpec {
    std::optional<ClassicalState> initial;
    std::optional<double> energy;  // with theta0; alternative to `initial`
    double theta0 = 0.0;
    double t_end = 0.0;
    double tol = 1e-10;
    long samples = 2001;
};

struct PeriodSweepSpec {
    std::vector<double> energies;
    double tol = 1e-10;
    double periods = 6.0;
};

struct SpectrumSpec {
    int levels = 6;
    bool refine = true;
    GridSpec xi_grid;
    GridSpec x_grid;
    std::vector<std::pair<double, double>> extra_triples;  // additional (alpha, beta)
};

struct EigensolveSpec {
    int levels = 6;
    std::string space = "both";  // "xi" | "x" | "both"
    bool refine = true;
    GridSpec xi_grid;
    GridSpec x_grid;
};

struct WavefunctionSpec {
    int levels = 3;        // number of levels, n = 0..levels-1
    double xi_max = 0.0;   // 0 = default from the turning point of the top level
    long samples = 4001;
};

struct PhasePortraitSpec {
    std::vector<double> energies;
    double theta0 = 0.0;
    double periods = 2.0;
    long samples = 600;
    double tol = 1e-10;
};

struct LinearizeCheckSpec {
    std::optional<double> energy;
    std::optional<ClassicalState> initial;  // alternative to energy (e.g. the fixed point)
    double theta0 = 0.0;
    double periods = 5.0;
    double tol = 1e-10;
    long samples = 4096;
};

/// One validated JSON document holding the model, the ordering choice and
/// per-command blocks. Unknown keys are rejected with their full path;
/// module-level invariants are re-validated on load by constructing the
/// domain types.
struct RunConfig {
    ModelParams model;
    std::optional<AmbiguityTriple> ambiguity;
    double m0 = 1.0;

    std::optional<SimulateSpec> simulate;
    std::optional<PeriodSweepSpec> period_sweep;
    std::optional<SpectrumSpec> spectrum;
    std::optional<EigensolveSpec> eigensolve;
    std::optional<WavefunctionSpec> wavefunction;
    std::optional<PhasePortraitSpec> phase_portrait;
    std::optional<LinearizeCheckSpec> linearize_check;

    nlohmann::json resolved;  // the validated document, embedded in reports

    explicit RunConfig(const ModelParams& m) : model(m) {}
};

/// Parse and validate a config document.
RunConfig parse_run_config(const nlohmann::json& doc);

/// Load a config file and apply `key.path=value` overrides (overrides win).
RunConfig load_run_config(const std::string& path,
                          const std::vector<std::string>& overrides = {});

/// Apply one `key.path=value` assignment to a document; the value is parsed
/// as JSON when possible and taken as a string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment);

}  // namespace pdmosc::io

#endif  // PDMOSC_IO_RUN_CONFIG_HPP
