#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

#include "pdmosc/classical.hpp"

using namespace pdmosc;

namespace {
const ModelParams kUnit(1.0, 1.0);
}

TEST_CASE("phase-plane vector field values") {
    const Eigen::Array2d at_fixed = rhs({0.25, 0.0}, kUnit);
    CHECK(std::fabs(at_fixed[0]) <= 1e-14);
    CHECK(std::fabs(at_fixed[1]) <= 1e-14);

    const Eigen::Array2d at_rest = rhs({1.0, 0.0}, kUnit);
    CHECK(at_rest[0] == 0.0);
    CHECK(at_rest[1] == doctest::Approx(-15.0 / 8.0).epsilon(1e-15));

    const Eigen::Array2d moving = rhs({1.0, 1.0}, kUnit);
    CHECK(moving[0] == 1.0);
    CHECK(moving[1] == doctest::Approx(-11.0 / 8.0).epsilon(1e-15));

    CHECK_THROWS_AS(rhs({0.0, 1.0}, kUnit), std::domain_error);
}

TEST_CASE("closed-form orbit: values, bounds, admissibility") {
    const OrbitSolution orbit(2.0, 0.0, kUnit);
    CHECK(orbit.x(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(orbit.x_inner() ==
          doctest::Approx(0.5 * (1.0 - std::sqrt(3.0) / 2.0)).epsilon(1e-14));
    CHECK(orbit.x_inner() == doctest::Approx(0.0669872981077807).epsilon(1e-12));

    // scan confirms the extremes and positivity
    double lo = 1e300, hi = -1e300;
    for (int i = 0; i < 20000; ++i) {
        const double x = orbit.x(orbit.period() * i / 20000.0);
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    CHECK(lo > 0.0);
    CHECK(lo == doctest::Approx(orbit.x_inner()).epsilon(1e-7));
    CHECK(hi == doctest::Approx(orbit.x_outer()).epsilon(1e-7));

    CHECK_THROWS_AS(OrbitSolution(1.0, 0.0, kUnit), AmplitudeDomainError);   // E = a w
    CHECK_THROWS_AS(OrbitSolution(0.5, 0.0, kUnit), AmplitudeDomainError);   // below
    CHECK_THROWS_AS(OrbitSolution(-2.0, 0.0, kUnit), AmplitudeDomainError);  // E < 0
}

TEST_CASE("first integral: values and consistency with the Hamiltonian") {
    CHECK(energy_from_state({0.25, 0.0}, kUnit) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(energy_from_state({0.5, 0.0}, kUnit) == doctest::Approx(1.25).epsilon(1e-14));

    for (const double x : {0.1, 0.4, 1.0, 3.0})
        for (const double xdot : {-1.0, 0.0, 2.0})
            CHECK(energy_from_state({x, xdot}, kUnit) ==
                  doctest::Approx(hamiltonian(ClassicalState{x, xdot}, kUnit))
                      .epsilon(1e-13));

    // round-trip: states sampled from the closed form recover the stored E
    const OrbitSolution orbit(2.0, 0.3, kUnit);
    for (int i = 0; i <= 40; ++i) {
        const double t = 10.0 * i / 40.0;
        CHECK(energy_from_state(orbit.state(t), kUnit) ==
              doctest::Approx(orbit.E).epsilon(1e-10));
    }
}

TEST_CASE("integration matches the closed form over ten periods") {
    const OrbitSolution orbit(2.0, 0.0, kUnit);
    const double t_end = 10.0 * orbit.period();
    const Trajectory traj = integrate(orbit.state(0.0), t_end, 1e-10, kUnit, 2048);

    double worst = 0.0;
    for (Eigen::Index i = 0; i < traj.times.size(); ++i)
        worst = std::max(worst, std::fabs(traj.x[i] - orbit.x(traj.times[i])));
    CHECK(worst < 1e-6);
    CHECK(traj.max_energy_drift < 1e-8);
    CHECK(traj.max_energy_drift <= traj.tol);        // the solver-reported tolerance
    CHECK(traj.max_energy_drift <= 10.0 * traj.tol);

    // times strictly increasing, states on the branch
    for (Eigen::Index i = 1; i < traj.times.size(); ++i) {
        CHECK(traj.times[i] > traj.times[i - 1]);
        CHECK(traj.x[i] > 0.0);
    }
    // positivity bound from the closed-form inner turning point
    CHECK(traj.x.minCoeff() >= orbit.x_inner() - 1e-9);
}

TEST_CASE("fixed-point initial condition stays put") {
    const Trajectory traj = integrate({0.25, 0.0}, 20.0, 1e-10, kUnit, 128);
    CHECK((traj.x - 0.25).abs().maxCoeff() < 1e-12);
    CHECK(traj.xdot.abs().maxCoeff() < 1e-12);
}

TEST_CASE("energy drift stays below 1e-8 over one hundred periods") {
    const OrbitSolution orbit(2.0, 0.0, kUnit);
    const Trajectory traj =
        integrate(orbit.state(0.0), 100.0 * orbit.period(), 1e-10, kUnit, 512);
    CHECK(traj.max_energy_drift < 1e-8);
}

TEST_CASE("measured period is pi/omega at every admissible energy") {
    for (const double energy : {1.5, 2.0, 5.0, 10.0}) {
        const OrbitSolution orbit(energy, 0.0, kUnit);
        const Trajectory traj =
            integrate(orbit.state(0.0), 6.0 * orbit.period(), 1e-10, kUnit, 257);
        CHECK(measure_period(traj) == doctest::Approx(M_PI).epsilon(1e-6));
    }

    const ModelParams fast(2.0, 1.0);
    const OrbitSolution orbit(5.0, 0.0, fast);
    const Trajectory traj =
        integrate(orbit.state(0.0), 6.0 * orbit.period(), 1e-10, fast, 257);
    CHECK(measure_period(traj) == doctest::Approx(M_PI / 2.0).epsilon(1e-6));
}

TEST_CASE("period measurement needs enough oscillations") {
    // constant trajectory: no maxima at all
    const Trajectory still = integrate({0.25, 0.0}, 30.0, 1e-10, kUnit, 128);
    CHECK_THROWS_AS(measure_period(still), InsufficientSpan);

    // a bit over one period: too few maxima
    const OrbitSolution orbit(2.0, 0.0, kUnit);
    const Trajectory brief =
        integrate(orbit.state(0.0), 1.2 * orbit.period(), 1e-10, kUnit, 128);
    CHECK_THROWS_AS(measure_period(brief), InsufficientSpan);
}

TEST_CASE("isochronicity: relative spread below 1e-6 across a decade of energies") {
    std::vector<double> periods;
    for (const double energy : {1.5, 2.0, 2.9, 4.2, 6.0, 8.4, 11.0, 15.0}) {
        const OrbitSolution orbit(energy, 0.0, kUnit);
        const Trajectory traj =
            integrate(orbit.state(0.0), 6.0 * orbit.period(), 1e-10, kUnit, 257);
        periods.push_back(measure_period(traj));
    }
    const double mean =
        std::accumulate(periods.begin(), periods.end(), 0.0) / periods.size();
    double var = 0.0;
    for (const double p : periods) var += (p - mean) * (p - mean);
    const double stddev = std::sqrt(var / periods.size());
    CHECK(stddev / mean < 1e-6);
    CHECK(mean == doctest::Approx(M_PI).epsilon(1e-8));
}

TEST_CASE("fixed points sit at the potential minimum and annihilate the field") {
    for (const double omega : {0.5, 1.0, 2.5}) {
        const ModelParams params(omega, 1.0);
        const auto points = fixed_points(params);
        REQUIRE(points.size() == 1);
        CHECK(points[0].x == doctest::Approx(1.0 / (4.0 * omega)).epsilon(1e-15));
        CHECK(points[0].xdot == 0.0);
        const Eigen::Array2d field = rhs(points[0], params);
        CHECK(std::fabs(field[0]) <= 1e-14);
        CHECK(std::fabs(field[1]) <= 1e-14);
        CHECK(points[0].x == doctest::Approx(potential_minimizer(params)));
    }
    const auto mirrored = fixed_points(ModelParams(1.0, -1.0));
    CHECK(mirrored[0].x == doctest::Approx(-0.25));
}

TEST_CASE("witness at the fixed point: X = e^{i w t} / (2 sqrt w)") {
    const Trajectory still = integrate({0.25, 0.0}, 5.0 * M_PI, 1e-11, kUnit, 128);
    const WitnessResult witness = linearization_witness(still, 512);

    for (Eigen::Index i = 0; i < witness.times.size(); i += 50) {
        const double t = witness.times[i];
        CHECK(std::abs(witness.X[i] -
                       0.5 * std::complex<double>(std::cos(t), std::sin(t))) < 1e-10);
    }
    CHECK(witness.max_residual_scaled() < 1e-9);
}

TEST_CASE("witness residual on a real orbit over five periods") {
    const OrbitSolution orbit(2.0, 0.0, kUnit);
    const Trajectory traj =
        integrate(orbit.state(0.0), 5.0 * orbit.period(), 1e-10, kUnit, 257);
    const WitnessResult witness = linearization_witness(traj, 4096);
    CHECK(witness.max_residual_scaled() < 1e-5);
    CHECK(witness.residual.size() == witness.times.size());
    CHECK(witness.scale > 0.0);
}

TEST_CASE("witness residual converges at the stencil order, then floors") {
    const OrbitSolution orbit(2.0, 0.0, kUnit);
    const Trajectory tight =
        integrate(orbit.state(0.0), 5.0 * orbit.period(), 1e-12, kUnit, 257);
    const double r32 = linearization_witness(tight, 32).max_residual_scaled();
    const double r64 = linearization_witness(tight, 64).max_residual_scaled();
    const double r128 = linearization_witness(tight, 128).max_residual_scaled();
    CHECK(r32 / r64 > 30.0);
    CHECK((r64 / r128 > 30.0 || r128 < 1e-10));

    // tightening the integrator tolerance lowers the floor (or saturates)
    const Trajectory loose =
        integrate(orbit.state(0.0), 5.0 * orbit.period(), 1e-8, kUnit, 257);
    const double r_loose = linearization_witness(loose, 4096).max_residual_scaled();
    const double r_tight = linearization_witness(tight, 4096).max_residual_scaled();
    CHECK(r_tight <= r_loose * 1.2);
    CHECK(r_tight < 1e-7);
}

TEST_CASE("F-equation algebraic residual vanishes to rounding") {
    const OrbitSolution orbit(2.0, 0.0, kUnit);
    for (int i = 0; i <= 64; ++i) {
        const double x = orbit.x(orbit.period() * i / 64.0);
        CHECK(std::fabs(f_equation_residual(x)) < 1e-14);
    }
    for (const double x : {0.05, 0.25, 1.0, 10.0})
        CHECK(std::fabs(f_equation_residual(x)) < 1e-14);
}

TEST_CASE("mirror map is an involution onto the mirrored system") {
    const OrbitSolution orbit(2.0, 0.0, kUnit);
    const Trajectory traj =
        integrate(orbit.state(0.0), 2.0 * orbit.period(), 1e-10, kUnit, 129);
    const Trajectory mirrored = mirror_map(traj);

    CHECK(mirrored.params.a == -kUnit.a);
    CHECK(mirrored.params.branch == Branch::negative);
    for (Eigen::Index i = 0; i < traj.times.size(); i += 16) {
        CHECK(mirrored.x[i] == -traj.x[i]);
        CHECK(mirrored.xdot[i] == -traj.xdot[i]);
        CHECK(mirrored.energy[i] == traj.energy[i]);
        // mirrored states satisfy the first integral of the mirrored system
        CHECK(energy_from_state(mirrored.state(i), mirrored.params) ==
              doctest::Approx(traj.energy[i]).epsilon(1e-12));
        // dense output flipped consistently
        CHECK(mirrored.x_at(traj.times[i]) == -traj.x_at(traj.times[i]));
    }
    // mirrored states satisfy the mirrored vector field
    for (Eigen::Index i = 0; i < traj.times.size(); i += 16) {
        const Eigen::Array2d f = rhs(traj.state(i), kUnit);
        const Eigen::Array2d g = rhs(mirrored.state(i), mirrored.params);
        CHECK(g[0] == doctest::Approx(-f[0]).epsilon(1e-13));
        CHECK(g[1] == doctest::Approx(-f[1]).epsilon(1e-13));
    }

    const Trajectory back = mirror_map(mirrored);
    CHECK(back.params.a == kUnit.a);
    CHECK((back.x - traj.x).abs().maxCoeff() == 0.0);
    CHECK((back.xdot - traj.xdot).abs().maxCoeff() == 0.0);
}

TEST_CASE("negative-branch orbits mirror the positive branch") {
    const ModelParams neg(1.0, -1.0);
    const OrbitSolution mirrored(2.0, 0.0, neg);
    const OrbitSolution plain(2.0, 0.0, kUnit);
    for (int i = 0; i <= 16; ++i) {
        const double t = plain.period() * i / 16.0;
        CHECK(mirrored.x(t) == doctest::Approx(-plain.x(t)).epsilon(1e-14));
    }
    const Trajectory traj = integrate(mirrored.state(0.0), 3.2, 1e-10, neg, 65);
    CHECK(traj.x.maxCoeff() < 0.0);
    CHECK(traj.max_energy_drift < 1e-9);
}

TEST_CASE("orbit reaching the exclusion wall raises SingularWallHit") {
    const ModelParams walled(1.0, 1.0, Branch::positive, 1e-3);
    // outer turning point of an orbit whose inner turning point ~ a/(8E)
    // lies inside the wall
    const OrbitSolution orbit(250.0, M_PI / 2.0, walled);
    auto run = [&] { integrate(orbit.state(0.0), 4.0, 1e-10, walled, 64); };
    CHECK_THROWS_AS(run(), SingularWallHit);
}

TEST_CASE("tolerance outside the contract is rejected") {
    CHECK_THROWS_AS(integrate({0.5, 0.0}, 1.0, 1e-2, kUnit), std::invalid_argument);
    CHECK_THROWS_AS(integrate({0.5, 0.0}, 1.0, 1e-14, kUnit), std::invalid_argument);
}
