#include "pdmosc/io/commands.hpp"

#include <algorithm>
#include <future>
#include <ostream>
#include <sstream>
#include <vector>

#include "pdmosc/classical.hpp"
#include "pdmosc/eigensolve.hpp"
#include "pdmosc/io/csv.hpp"
#include "pdmosc/quantum.hpp"

namespace pdmosc::io {

namespace {

using nlohmann::json;

AmbiguityTriple require_ambiguity(const RunConfig& cfg) {
    if (!cfg.ambiguity)
        throw ConfigError("config error at 'ambiguity': missing required key "
                          "(needed by quantum commands)");
    return *cfg.ambiguity;
}

QuantumConfig quantum_config(const RunConfig& cfg, const AmbiguityTriple& triple) {
    return QuantumConfig(cfg.model, triple, cfg.m0);
}

void warn_if_boundary(const QuantumConfig& qc, std::ostream& diag) {
    if (qc.boundary_case())
        diag << "warning: a^2 + epsilon equals 1/4; the singular endpoint is "
                "limit-circle there and numeric results are reduced-confidence\n";
}

ClassicalState simulate_initial_state(const RunConfig& cfg, const SimulateSpec& spec) {
    if (spec.initial) return *spec.initial;
    return OrbitSolution(*spec.energy, spec.theta0, cfg.model).state(0.0);
}

EigenGrid grid_or_default(const GridSpec& spec, const EigenGrid& fallback) {
    if (spec.length == 0.0 && spec.n_points == 0) return fallback;
    const double length = spec.length > 0.0 ? spec.length : fallback.length();
    const Eigen::Index n = spec.n_points > 0 ? spec.n_points : fallback.n_points;
    return EigenGrid::uniform(length, n);
}

json level_array(const Eigen::ArrayXd& values) {
    json out = json::array();
    for (Eigen::Index i = 0; i < values.size(); ++i) out.push_back(values[i]);
    return out;
}

json spectrum_for_triple(const RunConfig& cfg, const AmbiguityTriple& triple,
                         const SpectrumSpec& spec, std::ostream& diag) {
    const QuantumConfig qc = quantum_config(cfg, triple);
    warn_if_boundary(qc, diag);
    const int k = spec.levels;

    const SpectrumTable analytic = analytic_spectrum(qc, k);
    EigenResult xi = solve_xi_space(qc, grid_or_default(spec.xi_grid, default_xi_grid(qc, k)), k);
    EigenResult xs = solve_x_space(qc, grid_or_default(spec.x_grid, default_x_grid(qc, k)), k);
    if (spec.refine) {
        xi = refine(xi, qc);
        xs = refine(xs, qc);
    }

    json entry;
    entry["alpha"] = triple.alpha();
    entry["beta"] = triple.beta();
    entry["gamma"] = triple.gamma();
    entry["epsilon"] = triple.epsilon();
    entry["reduced_confidence"] = qc.boundary_case();

    json analytic_json;
    analytic_json["levels"] = json::array();
    for (const auto& level : analytic.levels) analytic_json["levels"].push_back(level.energy);
    analytic_json["gaps"] = level_array(spacing_report(analytic));
    entry["analytic"] = analytic_json;

    auto numeric_json = [&](const EigenResult& r) {
        json block;
        block["method"] = r.method;
        block["levels"] = level_array(r.values);
        block["est_error"] = level_array(r.est_error);
        block["gaps"] = level_array(spacing_report(r));
        block["grid"] = {{"lo", r.grid.lo}, {"hi", r.grid.hi}, {"n_points", r.grid.n_points}};
        json diff = json::array();
        for (Eigen::Index i = 0; i < r.values.size(); ++i)
            diff.push_back(std::fabs(r.values[i] - analytic.levels[i].energy));
        block["abs_diff_analytic"] = diff;
        return block;
    };
    entry["xi_space"] = numeric_json(xi);
    entry["x_space"] = numeric_json(xs);
    return entry;
}

}  // namespace

void cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& diag) {
    (void)diag;
    if (!cfg.simulate) throw ConfigError("config error at 'simulate': missing required key");
    const SimulateSpec& spec = *cfg.simulate;
    const Trajectory traj =
        integrate(simulate_initial_state(cfg, spec), spec.t_end, spec.tol, cfg.model,
                  spec.samples);
    out << "t,x,xdot,p,H\n";
    for (Eigen::Index i = 0; i < traj.times.size(); ++i) {
        const double p = cfg.model.a * traj.xdot[i] / traj.x[i];
        out << fmt17(traj.times[i]) << ',' << fmt17(traj.x[i]) << ',' << fmt17(traj.xdot[i])
            << ',' << fmt17(p) << ',' << fmt17(traj.energy[i]) << '\n';
    }
}

void cmd_period_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& diag) {
    (void)diag;
    if (!cfg.period_sweep)
        throw ConfigError("config error at 'period_sweep': missing required key");
    const PeriodSweepSpec& spec = *cfg.period_sweep;
    const double omega = cfg.model.omega;

    struct Row {
        double energy;
        double period = 0.0;
        std::string status;
    };
    auto run_one = [&cfg, &spec, omega](double energy) -> Row {
        const double ratio = energy / (cfg.model.a * omega);
        if (!(std::fabs(ratio) > 1.0) || ratio < 0.0) return {energy, 0.0, "unbounded/forbidden"};
        if (ratio - 1.0 < 1e-6) return {energy, 0.0, "degenerate amplitude"};
        const OrbitSolution orbit(energy, 0.0, cfg.model);
        const Trajectory traj = integrate(orbit.state(0.0), spec.periods * orbit.period(),
                                          spec.tol, cfg.model, 257);
        return {energy, measure_period(traj), "ok"};
    };

    // fan out one task per energy, merge in input order
    std::vector<std::future<Row>> futures;
    futures.reserve(spec.energies.size());
    for (const double energy : spec.energies)
        futures.push_back(std::async(std::launch::async, run_one, energy));

    out << "E,T,T_omega_over_pi,status\n";
    for (auto& f : futures) {
        const Row row = f.get();
        out << fmt17(row.energy) << ',';
        if (row.status == "ok")
            out << fmt17(row.period) << ',' << fmt17(row.period * omega / M_PI) << ',';
        else
            out << ",,";
        out << row.status << '\n';
    }
}

void cmd_spectrum(const RunConfig& cfg, std::ostream& out, std::ostream& diag) {
    if (!cfg.spectrum) throw ConfigError("config error at 'spectrum': missing required key");
    const SpectrumSpec& spec = *cfg.spectrum;

    std::vector<AmbiguityTriple> triples{require_ambiguity(cfg)};
    for (const auto& [alpha, beta] : spec.extra_triples) triples.emplace_back(alpha, beta);

    // admissibility is checked up front so a violating triple fails the run
    for (const AmbiguityTriple& t : triples) (void)quantum_config(cfg, t);

    std::vector<std::future<json>> futures;
    futures.reserve(triples.size());
    for (const AmbiguityTriple& t : triples)
        futures.push_back(std::async(std::launch::async, [&cfg, &spec, t]() {
            std::ostringstream local;
            json entry = spectrum_for_triple(cfg, t, spec, local);
            entry["warnings"] = local.str();
            return entry;
        }));

    json report;
    report["config"] = cfg.resolved;
    report["results"] = json::array();
    for (auto& f : futures) {
        json entry = f.get();
        const std::string warnings = entry["warnings"].get<std::string>();
        if (!warnings.empty()) diag << warnings;
        entry.erase("warnings");
        report["results"].push_back(entry);
    }
    out << report.dump(2) << '\n';
}

void cmd_eigensolve(const RunConfig& cfg, std::ostream& out, std::ostream& diag) {
    if (!cfg.eigensolve) throw ConfigError("config error at 'eigensolve': missing required key");
    const EigensolveSpec& spec = *cfg.eigensolve;
    const QuantumConfig qc = quantum_config(cfg, require_ambiguity(cfg));
    warn_if_boundary(qc, diag);
    const int k = spec.levels;

    std::vector<EigenResult> results;
    if (spec.space == "xi" || spec.space == "both")
        results.push_back(
            solve_xi_space(qc, grid_or_default(spec.xi_grid, default_xi_grid(qc, k)), k));
    if (spec.space == "x" || spec.space == "both")
        results.push_back(
            solve_x_space(qc, grid_or_default(spec.x_grid, default_x_grid(qc, k)), k));
    if (spec.refine)
        for (EigenResult& r : results) r = refine(r, qc);

    out << "method,n,energy,est_error,analytic,abs_diff\n";
    for (const EigenResult& r : results)
        for (Eigen::Index n = 0; n < r.values.size(); ++n) {
            const double exact = analytic_energy(static_cast<int>(n), qc);
            out << r.method << ',' << n << ',' << fmt17(r.values[n]) << ','
                << fmt17(r.est_error[n]) << ',' << fmt17(exact) << ','
                << fmt17(std::fabs(r.values[n] - exact)) << '\n';
        }
}

void cmd_wavefunction(const RunConfig& cfg, std::ostream& out, std::ostream& diag) {
    if (!cfg.wavefunction)
        throw ConfigError("config error at 'wavefunction': missing required key");
    const WavefunctionSpec& spec = *cfg.wavefunction;
    const QuantumConfig qc = quantum_config(cfg, require_ambiguity(cfg));
    warn_if_boundary(qc, diag);

    const int k = spec.levels;
    std::vector<Wavefunction> wfs;
    wfs.reserve(k);
    for (int n = 0; n < k; ++n) wfs.push_back(make_wavefunction(n, qc));

    double xi_max = spec.xi_max;
    if (xi_max == 0.0) {
        const double e_top = analytic_energy(k - 1, qc);
        xi_max = std::max(5.0 / std::sqrt(cfg.m0 * cfg.model.omega),
                          1.3 * std::sqrt(2.0 * e_top / (cfg.m0 * cfg.model.omega *
                                                         cfg.model.omega)));
    }

    out << "xi,V_eff";
    for (int n = 0; n < k; ++n) out << ",phi_" << n;
    out << ",x";
    for (int n = 0; n < k; ++n) out << ",psi_" << n;
    out << '\n';

    const long m = spec.samples;
    for (long i = 1; i <= m; ++i) {
        const double xi = xi_max * static_cast<double>(i) / static_cast<double>(m);
        out << fmt17(xi) << ',' << fmt17(effective_potential(xi, qc));
        for (const Wavefunction& wf : wfs) out << ',' << fmt17(wf.phi(xi));
        const double x = inverse_map(xi, qc);
        out << ',' << fmt17(x);
        for (const Wavefunction& wf : wfs) out << ',' << fmt17(wf.psi(x));
        out << '\n';
    }
}

void cmd_phase_portrait(const RunConfig& cfg, std::ostream& out, std::ostream& diag) {
    (void)diag;
    if (!cfg.phase_portrait)
        throw ConfigError("config error at 'phase_portrait': missing required key");
    const PhasePortraitSpec& spec = *cfg.phase_portrait;

    auto run_one = [&cfg, &spec](double energy) -> Trajectory {
        const OrbitSolution orbit(energy, spec.theta0, cfg.model);
        return integrate(orbit.state(0.0), spec.periods * orbit.period(), spec.tol, cfg.model,
                         spec.samples);
    };
    std::vector<std::future<Trajectory>> futures;
    futures.reserve(spec.energies.size());
    for (const double energy : spec.energies)
        futures.push_back(std::async(std::launch::async, run_one, energy));

    out << "E,t,x,xdot\n";
    for (std::size_t j = 0; j < futures.size(); ++j) {
        const Trajectory traj = futures[j].get();
        for (Eigen::Index i = 0; i < traj.times.size(); ++i)
            out << fmt17(spec.energies[j]) << ',' << fmt17(traj.times[i]) << ','
                << fmt17(traj.x[i]) << ',' << fmt17(traj.xdot[i]) << '\n';
    }
}

void cmd_linearize_check(const RunConfig& cfg, std::ostream& out, std::ostream& diag) {
    if (!cfg.linearize_check)
        throw ConfigError("config error at 'linearize_check': missing required key");
    const LinearizeCheckSpec& spec = *cfg.linearize_check;

    ClassicalState initial{0.0, 0.0};
    double period = M_PI / cfg.model.omega;
    if (spec.initial) {
        initial = *spec.initial;
    } else {
        const OrbitSolution orbit(*spec.energy, spec.theta0, cfg.model);
        initial = orbit.state(0.0);
        period = orbit.period();
    }
    const Trajectory traj =
        integrate(initial, spec.periods * period, spec.tol, cfg.model, 257);
    const WitnessResult witness = linearization_witness(traj, spec.samples);

    out << "t,abs_X,residual\n";
    for (Eigen::Index i = 0; i < witness.times.size(); ++i)
        out << fmt17(witness.times[i]) << ',' << fmt17(std::abs(witness.X[i])) << ','
            << fmt17(witness.residual[i]) << '\n';

    json summary;
    summary["max_residual"] = witness.max_residual;
    summary["scale"] = witness.scale;
    summary["max_residual_scaled"] = witness.max_residual_scaled();
    diag << summary.dump() << '\n';
}

int run_command(const std::string& command, const RunConfig& cfg, std::ostream& out,
                std::ostream& diag) {
    std::string name = command;
    std::replace(name.begin(), name.end(), '-', '_');
    try {
        if (name == "simulate")
            cmd_simulate(cfg, out, diag);
        else if (name == "period_sweep")
            cmd_period_sweep(cfg, out, diag);
        else if (name == "spectrum")
            cmd_spectrum(cfg, out, diag);
        else if (name == "eigensolve")
            cmd_eigensolve(cfg, out, diag);
        else if (name == "wavefunction")
            cmd_wavefunction(cfg, out, diag);
        else if (name == "phase_portrait")
            cmd_phase_portrait(cfg, out, diag);
        else if (name == "linearize_check")
            cmd_linearize_check(cfg, out, diag);
        else {
            diag << "error: unknown command '" << command << "'\n";
            return exit_validation;
        }
        return exit_ok;
    } catch (const BoundStateViolation& e) {
        diag << "error: " << e.what() << '\n';
        return exit_admissibility;
    } catch (const ConfigError& e) {
        diag << "error: " << e.what() << '\n';
        return exit_validation;
    } catch (const std::logic_error& e) {  // invalid_argument, domain_error
        diag << "error: " << e.what() << '\n';
        return exit_validation;
    } catch (const std::runtime_error& e) {  // solver failures
        diag << "error: " << e.what() << '\n';
        return exit_solver;
    } catch (const std::exception& e) {
        diag << "error: " << e.what() << '\n';
        return exit_solver;
    }
}

}  // namespace pdmosc::io
