#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include "pdmosc/classical.hpp"
#include "pdmosc/io/commands.hpp"
#include "pdmosc/io/run_config.hpp"

using namespace pdmosc;
using namespace pdmosc::io;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json base_model() {
    return json{{"model", {{"omega", 1.0}, {"a", 1.0}}},
                {"ambiguity", {{"alpha", -0.25}, {"beta", -0.5}}},
                {"m0", 1.0}};
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream stream(text);
    std::string line;
    while (std::getline(stream, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.push_back("");
        rows.push_back(cells);
    }
    return rows;
}

struct RunOutput {
    int code;
    std::string out;
    std::string diag;
};

RunOutput run(const std::string& command, const json& doc) {
    const RunConfig cfg = parse_run_config(doc);
    std::ostringstream out, diag;
    const int code = run_command(command, cfg, out, diag);
    return {code, out.str(), diag.str()};
}

int run_binary(const std::string& args) {
    const int status = std::system((std::string(PDMOSC_CLI_PATH) + " " + args).c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("config validation: unknown keys are rejected with their path") {
    json doc = base_model();
    doc["modle"] = 1;
    CHECK_THROWS_WITH_AS(parse_run_config(doc), doctest::Contains("modle"), ConfigError);

    json doc2 = base_model();
    doc2["simulate"] = {{"t_end", 1.0}, {"initial", {{"x", 0.5}, {"xdot", 0.0}}},
                        {"tolerance", 1e-10}};
    CHECK_THROWS_WITH_AS(parse_run_config(doc2), doctest::Contains("simulate.tolerance"),
                         ConfigError);

    json doc3 = base_model();
    doc3["model"]["colour"] = "red";
    CHECK_THROWS_WITH_AS(parse_run_config(doc3), doctest::Contains("model.colour"),
                         ConfigError);
}

TEST_CASE("config validation: missing keys carry their path") {
    json doc = base_model();
    doc["model"].erase("omega");
    CHECK_THROWS_WITH_AS(parse_run_config(doc), doctest::Contains("model.omega"), ConfigError);

    json doc2 = base_model();
    doc2["simulate"] = {{"tol", 1e-10}, {"initial", {{"x", 0.5}, {"xdot", 0.0}}}};
    CHECK_THROWS_WITH_AS(parse_run_config(doc2), doctest::Contains("simulate.t_end"),
                         ConfigError);

    // neither initial nor energy
    json doc3 = base_model();
    doc3["simulate"] = {{"t_end", 1.0}};
    CHECK_THROWS_AS(parse_run_config(doc3), ConfigError);
}

TEST_CASE("config validation: module invariants re-checked on load") {
    json doc = base_model();
    doc["model"]["omega"] = -1.0;
    CHECK_THROWS_AS(parse_run_config(doc), ConfigError);

    json doc2 = base_model();
    doc2["ambiguity"] = {{"alpha", -0.25}, {"beta", -0.5}, {"gamma", 0.33}};
    CHECK_THROWS_AS(parse_run_config(doc2), ConfigError);

    json doc3 = base_model();
    doc3["model"]["branch"] = "negative";  // a > 0 on the negative branch
    CHECK_THROWS_AS(parse_run_config(doc3), ConfigError);

    json doc4 = base_model();
    doc4["simulate"] = {{"t_end", 1.0}, {"energy", 2.0}, {"tol", 0.5}};
    CHECK_THROWS_WITH_AS(parse_run_config(doc4), doctest::Contains("simulate.tol"),
                         ConfigError);
}

TEST_CASE("overrides: parsed as JSON values, flags win") {
    json doc = base_model();
    apply_override(doc, "model.omega=2.5");
    CHECK(doc["model"]["omega"] == 2.5);
    apply_override(doc, "simulate.t_end=7");
    CHECK(doc["simulate"]["t_end"] == 7);
    apply_override(doc, "model.branch=positive");
    CHECK(doc["model"]["branch"] == "positive");
    CHECK_THROWS_AS(apply_override(doc, "nonsense"), ConfigError);
}

TEST_CASE("simulate: fixed point gives constant columns") {
    json doc = base_model();
    doc["simulate"] = {{"t_end", 5.0},
                       {"initial", {{"x", 0.25}, {"xdot", 0.0}}},
                       {"samples", 16}};
    const RunOutput result = run("simulate", doc);
    REQUIRE(result.code == 0);
    const auto rows = parse_csv(result.out);
    REQUIRE(rows.size() == 17);
    CHECK(rows[0] == std::vector<std::string>{"t", "x", "xdot", "p", "H"});
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(std::stod(rows[i][1]) == doctest::Approx(0.25).epsilon(1e-12));
        CHECK(std::stod(rows[i][2]) == doctest::Approx(0.0));
        CHECK(std::stod(rows[i][4]) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("simulate: energy start matches the closed-form orbit") {
    json doc = base_model();
    doc["simulate"] = {{"t_end", 10.0}, {"energy", 2.0}, {"theta0", 0.0}, {"samples", 200}};
    const RunOutput result = run("simulate", doc);
    REQUIRE(result.code == 0);
    const auto rows = parse_csv(result.out);
    const OrbitSolution orbit(2.0, 0.0, ModelParams(1.0, 1.0));
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double t = std::stod(rows[i][0]);
        CHECK(std::stod(rows[i][1]) == doctest::Approx(orbit.x(t)).epsilon(1e-6));
    }
}

TEST_CASE("simulate: missing block is a validation failure") {
    std::ostringstream out, diag;
    const RunConfig cfg = parse_run_config(base_model());
    CHECK(run_command("simulate", cfg, out, diag) == exit_validation);
    CHECK(diag.str().find("simulate") != std::string::npos);
}

TEST_CASE("period sweep: isochronous periods and row-level errors") {
    json doc = base_model();
    doc["period_sweep"] = {{"energies", {1.5, 2.0, 5.0, 10.0, 0.5}}};
    const RunOutput result = run("period-sweep", doc);
    REQUIRE(result.code == 0);
    const auto rows = parse_csv(result.out);
    REQUIRE(rows.size() == 6);
    CHECK(rows[0] == std::vector<std::string>{"E", "T", "T_omega_over_pi", "status"});
    for (int i = 1; i <= 4; ++i) {
        CHECK(std::stod(rows[i][2]) == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(rows[i][3] == "ok");
    }
    CHECK(rows[5][1].empty());
    CHECK(rows[5][3] == "unbounded/forbidden");

    // omega = 2: T = pi/2
    json doc2 = doc;
    doc2["model"]["omega"] = 2.0;
    doc2["period_sweep"]["energies"] = {5.0, 9.0};
    const RunOutput result2 = run("period-sweep", doc2);
    const auto rows2 = parse_csv(result2.out);
    CHECK(std::stod(rows2[1][1]) == doctest::Approx(M_PI / 2.0).epsilon(1e-6));

    // near-threshold energies are flagged, not measured
    json doc3 = base_model();
    doc3["period_sweep"] = {{"energies", {1.0 + 1e-9}}};
    const auto rows3 = parse_csv(run("period-sweep", doc3).out);
    CHECK(rows3[1][3] == "degenerate amplitude");
}

TEST_CASE("spectrum report: analytic values, gaps, numeric agreement") {
    json doc = base_model();
    doc["spectrum"] = {{"levels", 5}};
    const RunOutput result = run("spectrum", doc);
    REQUIRE(result.code == 0);
    const json report = json::parse(result.out);
    CHECK(report.contains("config"));
    REQUIRE(report["results"].size() == 1);
    const json& entry = report["results"][0];
    CHECK(entry["epsilon"].get<double>() == doctest::Approx(0.25));

    const auto& analytic = entry["analytic"]["levels"];
    REQUIRE(analytic.size() == 5);
    CHECK(analytic[0].get<double>() == doctest::Approx(2.1180).epsilon(1e-4));
    for (const auto& gap : entry["analytic"]["gaps"]) CHECK(gap.get<double>() == 2.0);

    for (int n = 0; n < 5; ++n) {
        CHECK(entry["xi_space"]["abs_diff_analytic"][n].get<double>() < 1e-4);
        CHECK(entry["x_space"]["abs_diff_analytic"][n].get<double>() < 1.2e-3);
    }
}

TEST_CASE("spectrum with several triples: same gaps, different offsets") {
    json doc = base_model();
    doc["spectrum"] = {{"levels", 4},
                       {"refine", false},
                       {"triples", {{0.0, -1.0}, {-0.5, 0.0}}}};
    const RunOutput result = run("spectrum", doc);
    REQUIRE(result.code == 0);
    const json report = json::parse(result.out);
    REQUIRE(report["results"].size() == 3);

    std::vector<double> offsets;
    for (const auto& entry : report["results"]) {
        for (const auto& gap : entry["analytic"]["gaps"]) CHECK(gap.get<double>() == 2.0);
        for (const auto& gap : entry["xi_space"]["gaps"])
            CHECK(gap.get<double>() == doctest::Approx(2.0).epsilon(1e-4));
        offsets.push_back(entry["analytic"]["levels"][0].get<double>());
    }
    CHECK(std::fabs(offsets[1] - offsets[0]) > 0.05);
    CHECK(std::fabs(offsets[2] - offsets[1]) > 0.05);
}

TEST_CASE("exit codes: admissibility 4, solver failure 3, validation 2") {
    // bound condition violated: a^2 + eps = 0.01 < 1/4
    json doc = base_model();
    doc["model"]["a"] = 0.1;
    doc["ambiguity"] = {{"alpha", 0.0}, {"beta", -1.0}};
    doc["spectrum"] = {{"levels", 3}};
    const RunOutput forbidden = run("spectrum", doc);
    CHECK(forbidden.code == exit_admissibility);
    CHECK(forbidden.diag.find("1/4") != std::string::npos);

    // boundary case accepted with a warning
    json doc2 = base_model();
    doc2["model"]["a"] = 0.5;
    doc2["ambiguity"] = {{"alpha", 0.0}, {"beta", -1.0}};
    doc2["spectrum"] = {{"levels", 2}, {"refine", false}};
    const RunOutput boundary = run("spectrum", doc2);
    CHECK(boundary.code == 0);
    CHECK(boundary.diag.find("warning") != std::string::npos);

    // orbit that reaches the exclusion wall mid-run
    json doc3 = base_model();
    doc3["model"]["wall"] = 1e-3;
    doc3["simulate"] = {{"t_end", 4.0}, {"energy", 250.0}, {"theta0", M_PI / 2.0}};
    const RunOutput wall = run("simulate", doc3);
    CHECK(wall.code == exit_solver);

    // below-threshold energy in simulate: rejected as validation
    json doc4 = base_model();
    doc4["simulate"] = {{"t_end", 4.0}, {"energy", 0.5}};
    CHECK(run("simulate", doc4).code == exit_validation);

    // unknown command
    std::ostringstream out, diag;
    CHECK(run_command("frobnicate", parse_run_config(base_model()), out, diag) ==
          exit_validation);
}

TEST_CASE("wavefunction table: headers, node counts, V_eff, normalization") {
    json doc = base_model();
    doc["wavefunction"] = {{"levels", 3}, {"xi_max", 6.0}, {"samples", 6000}};
    const RunOutput result = run("wavefunction", doc);
    REQUIRE(result.code == 0);
    const auto rows = parse_csv(result.out);
    REQUIRE(rows.size() == 6001);
    CHECK(rows[0] == std::vector<std::string>{"xi", "V_eff", "phi_0", "phi_1", "phi_2", "x",
                                              "psi_0", "psi_1", "psi_2"});

    int nodes1 = 0, nodes2 = 0;
    double prev1 = 0.0, prev2 = 0.0;
    double veff_min = 1e300, veff_argmin = 0.0, trapz = 0.0;
    double prev_xi = 0.0, prev_phi0sq = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double xi = std::stod(rows[i][0]);
        const double veff = std::stod(rows[i][1]);
        const double phi0 = std::stod(rows[i][2]);
        const double phi1 = std::stod(rows[i][3]);
        const double phi2 = std::stod(rows[i][4]);
        CHECK(phi0 > 0.0);  // ground state nodeless
        if (std::fabs(phi1) > 1e-9 && prev1 != 0.0 && (phi1 > 0) != (prev1 > 0)) ++nodes1;
        if (std::fabs(phi2) > 1e-9 && prev2 != 0.0 && (phi2 > 0) != (prev2 > 0)) ++nodes2;
        if (std::fabs(phi1) > 1e-9) prev1 = phi1;
        if (std::fabs(phi2) > 1e-9) prev2 = phi2;
        if (veff < veff_min) {
            veff_min = veff;
            veff_argmin = xi;
        }
        trapz += 0.5 * (phi0 * phi0 + prev_phi0sq) * (xi - prev_xi);
        prev_xi = xi;
        prev_phi0sq = phi0 * phi0;
        // x column consistent with the coordinate map (eta = 1/4)
        CHECK(std::stod(rows[i][5]) == doctest::Approx(0.25 * xi * xi).epsilon(1e-12));
    }
    CHECK(nodes1 == 1);
    CHECK(nodes2 == 2);
    CHECK(veff_min == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(veff_argmin == doctest::Approx(1.0).epsilon(1e-2));
    CHECK(trapz == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("linearize-check: residual column and stderr summary") {
    json doc = base_model();
    doc["linearize_check"] = {{"energy", 2.0}, {"periods", 5.0}, {"samples", 2048}};
    const RunOutput result = run("linearize-check", doc);
    REQUIRE(result.code == 0);
    const auto rows = parse_csv(result.out);
    CHECK(rows[0] == std::vector<std::string>{"t", "abs_X", "residual"});
    CHECK(rows.size() == 2041);  // samples minus the stencil margins

    const json summary = json::parse(result.diag);
    CHECK(summary["max_residual_scaled"].get<double>() < 1e-5);
    CHECK(summary["scale"].get<double>() > 0.0);

    // fixed-point run: residual at the discretization floor
    json doc2 = base_model();
    doc2["linearize_check"] = {{"initial", {{"x", 0.25}, {"xdot", 0.0}}},
                               {"periods", 5.0},
                               {"samples", 512}};
    const RunOutput still = run("linearize-check", doc2);
    REQUIRE(still.code == 0);
    const json summary2 = json::parse(still.diag);
    CHECK(summary2["max_residual_scaled"].get<double>() < 1e-9);
}

TEST_CASE("phase portrait: orbit samples consistent with their energy") {
    json doc = base_model();
    doc["phase_portrait"] = {{"energies", {1.5, 3.0}}, {"samples", 50}, {"periods", 2.0}};
    const RunOutput result = run("phase-portrait", doc);
    REQUIRE(result.code == 0);
    const auto rows = parse_csv(result.out);
    CHECK(rows[0] == std::vector<std::string>{"E", "t", "x", "xdot"});
    REQUIRE(rows.size() == 101);
    const ModelParams params(1.0, 1.0);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double e = std::stod(rows[i][0]);
        const ClassicalState state{std::stod(rows[i][2]), std::stod(rows[i][3])};
        CHECK(energy_from_state(state, params) == doctest::Approx(e).epsilon(1e-8));
    }
    CHECK(std::stod(rows[1][0]) == 1.5);
    CHECK(std::stod(rows[100][0]) == 3.0);
}

TEST_CASE("eigensolve command: per-level errors against the closed form") {
    json doc = base_model();
    doc["eigensolve"] = {{"levels", 3},
                         {"space", "xi"},
                         {"refine", true},
                         {"xi_grid", {{"length", 12.0}, {"n_points", 2000}}}};
    const RunOutput result = run("eigensolve", doc);
    REQUIRE(result.code == 0);
    const auto rows = parse_csv(result.out);
    CHECK(rows[0] == std::vector<std::string>{"method", "n", "energy", "est_error",
                                              "analytic", "abs_diff"});
    REQUIRE(rows.size() == 4);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i][0] == "xi-grid+richardson");
        CHECK(std::stod(rows[i][5]) < 1e-5);
    }
}

TEST_CASE("binary: determinism, overrides, exit codes") {
    const fs::path dir =
        fs::temp_directory_path() / ("pdmosc_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(dir);

    json doc = base_model();
    doc["spectrum"] = {{"levels", 4}, {"refine", false}};
    doc["simulate"] = {{"t_end", 6.0}, {"energy", 2.0}, {"samples", 200}};
    doc["period_sweep"] = {{"energies", {1.5, 5.0}}};
    {
        std::ofstream out(dir / "config.json");
        out << doc.dump(2);
    }
    const std::string cfg = (dir / "config.json").string();

    // byte-identical repeated runs
    for (const std::string command : {"spectrum", "simulate", "period-sweep"}) {
        const fs::path out1 = dir / (command + "_1.out");
        const fs::path out2 = dir / (command + "_2.out");
        CHECK(run_binary(command + " --config " + cfg + " --out " + out1.string() +
                         " 2>/dev/null") == 0);
        CHECK(run_binary(command + " --config " + cfg + " --out " + out2.string() +
                         " 2>/dev/null") == 0);
        const std::string first = slurp(out1);
        CHECK(first == slurp(out2));
        CHECK(!first.empty());
    }

    // flag override wins: omega = 2 halves the period (E = 5 stays bounded)
    const fs::path sweep = dir / "sweep.out";
    CHECK(run_binary("period-sweep --config " + cfg + " --set model.omega=2 --out " +
                     sweep.string() + " 2>/dev/null") == 0);
    const auto rows = parse_csv(slurp(sweep));
    CHECK(rows[2][3] == "ok");
    CHECK(std::stod(rows[2][1]) == doctest::Approx(M_PI / 2.0).epsilon(1e-6));

    // validation failure exits 2 (unknown key injected through an override)
    CHECK(run_binary("simulate --config " + cfg + " --set simulate.bogus=1 --out " +
                     (dir / "x.out").string() + " 2>/dev/null") == exit_validation);
    // missing config file
    CHECK(run_binary("simulate --config " + (dir / "nope.json").string() +
                     " 2>/dev/null") == exit_validation);
    // admissibility failure exits 4
    CHECK(run_binary("spectrum --config " + cfg +
                     " --set model.a=0.1 --set ambiguity.alpha=0 --set ambiguity.beta=-1"
                     " --out " +
                     (dir / "y.out").string() + " 2>/dev/null") == exit_admissibility);

    fs::remove_all(dir);
}
