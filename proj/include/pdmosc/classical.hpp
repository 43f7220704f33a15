#ifndef PDMOSC_CLASSICAL_HPP
#define PDMOSC_CLASSICAL_HPP

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "pdmosc/model.hpp"
#include "pdmosc/ode.hpp"

namespace pdmosc {

/// The integrated state reached the exclusion wall around the x = 0
/// singularity.
struct SingularWallHit : std::runtime_error {
    double t, x;
    SingularWallHit(double t_, double x_)
        : std::runtime_error("trajectory hit the singular wall at t = " + std::to_string(t_) +
                             ", x = " + std::to_string(x_)),
          t(t_), x(x_) {}
};

/// Trajectory too short for the requested measurement.
struct InsufficientSpan : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// |E/(a omega)| <= 1: no bounded oscillation exists at this energy.
struct AmplitudeDomainError : std::domain_error {
    using std::domain_error::domain_error;
};

/// Phase-plane vector field: (dx/dt, dxdot/dt) = (y, y^2/2x - 2 w^2 x + 1/8x).
inline Eigen::Array2d rhs(const ClassicalState& state, const ModelParams& params) {
    params.require_domain(state.x);
    const double w2 = params.omega * params.omega;
    return {state.xdot,
            state.xdot * state.xdot / (2.0 * state.x) - 2.0 * w2 * state.x +
                1.0 / (8.0 * state.x)};
}

/// First integral along the motion: E = a (xdot^2/2 + 2 w^2 x^2 + 1/8) / x.
inline double energy_from_state(const ClassicalState& state, const ModelParams& params) {
    params.require_domain(state.x);
    const double w2 = params.omega * params.omega;
    return params.a *
           (0.5 * state.xdot * state.xdot + 2.0 * w2 * state.x * state.x + 0.125) / state.x;
}

/// Time-sampled solution with per-sample energy and the dense interpolant of
/// the integrator, so states can be evaluated at arbitrary t in the span.
struct Trajectory {
    ModelParams params;
    Eigen::ArrayXd times;    // strictly increasing sample times
    Eigen::ArrayXd x;
    Eigen::ArrayXd xdot;
    Eigen::ArrayXd energy;   // first integral per sample
    DenseSolution<double, 2> dense;
    double tol = 0.0;               // integrator tolerance used
    double max_energy_drift = 0.0;  // measured max |E(t)-E(0)| / |E(0)|

    explicit Trajectory(const ModelParams& params_) : params(params_) {}

    ClassicalState state(Eigen::Index i) const { return {x[i], xdot[i]}; }
    double x_at(double t) const { return dense.component(t, 0); }
    double xdot_at(double t) const { return dense.component(t, 1); }
    double t_begin() const { return times[0]; }
    double t_end() const { return times[times.size() - 1]; }
};

/// Integrate the equation of motion from `initial` to t_end with adaptive
/// Dormand-Prince 5(4), recording n_samples uniform samples plus the dense
/// interpolant. Throws SingularWallHit if the orbit reaches the exclusion
/// wall and StepSizeUnderflow if the stepper collapses.
inline Trajectory integrate(const ClassicalState& initial, double t_end, double tol,
                            const ModelParams& params, Eigen::Index n_samples = 1025) {
    if (!(tol >= 1e-13 && tol <= 1e-3))
        throw std::invalid_argument("integrate: tol must lie in [1e-13, 1e-3]");
    if (n_samples < 2) throw std::invalid_argument("integrate: need at least 2 samples");
    params.require_domain(initial.x);

    const double w2 = params.omega * params.omega;
    auto field = [w2](double, const Eigen::Array2d& y) -> Eigen::Array2d {
        return {y[1], y[1] * y[1] / (2.0 * y[0]) - 2.0 * w2 * y[0] + 1.0 / (8.0 * y[0])};
    };
    auto guard = [&params](double t, const Eigen::Array2d& y) {
        if (!params.contains(y[0])) throw SingularWallHit(t, y[0]);
    };
    // each accepted state is projected back onto the energy level set (two
    // Newton steps along grad H), so the drift of the first integral stays
    // per-step bounded instead of accumulating secularly
    const double e0 = energy_from_state(initial, params);
    auto project = [&params, w2, e0](double, Eigen::Array2d& y) {
        for (int it = 0; it < 2; ++it) {
            const double x = y[0], v = y[1];
            const double r =
                params.a * (0.5 * v * v + 2.0 * w2 * x * x + 0.125) / x - e0;
            const double ex = -params.a * (0.5 * v * v + 0.125) / (x * x) +
                              2.0 * params.a * w2;
            const double ev = params.a * v / x;
            const double g2 = ex * ex + ev * ev;
            if (!(g2 > 1e-30) || std::fabs(r) < 1e-16 * std::fabs(e0)) break;
            y[0] -= r / g2 * ex;
            y[1] -= r / g2 * ev;
        }
    };

    OdeOptions opts;
    // the dense interpolant between projected nodes carries a small energy
    // wobble of order the local error; the internal safety factor keeps the
    // sampled drift within the requested tolerance
    opts.abs_tol = opts.rel_tol = 0.5 * tol;

    Trajectory traj{params};
    traj.tol = tol;
    traj.dense = integrate_dopri5<double, 2>(field, Eigen::Array2d{initial.x, initial.xdot},
                                             0.0, t_end, opts, guard, project);

    traj.times = Eigen::ArrayXd::LinSpaced(n_samples, 0.0, t_end);
    traj.x.resize(n_samples);
    traj.xdot.resize(n_samples);
    traj.energy.resize(n_samples);
    for (Eigen::Index i = 0; i < n_samples; ++i) {
        const Eigen::Array2d y = traj.dense(traj.times[i]);
        traj.x[i] = y[0];
        traj.xdot[i] = y[1];
        traj.energy[i] = energy_from_state({y[0], y[1]}, params);
    }
    traj.max_energy_drift = (traj.energy - traj.energy[0]).abs().maxCoeff() /
                            std::max(std::fabs(traj.energy[0]), 1e-300);
    return traj;
}

/// Closed-form bounded orbit
///   x(t) = E/(4 w^2 a) [1 + sqrt(1 - (a w / E)^2) sin(2 w t + theta0)],
/// defined for |E/(a w)| > 1; x(t) keeps the sign of the branch for all t.
struct OrbitSolution {
    double E;
    double theta0;
    ModelParams params;

    OrbitSolution(double E_, double theta0_, const ModelParams& params_)
        : E(E_), theta0(theta0_), params(params_) {
        const double ratio = E / (params.a * params.omega);
        if (!(std::fabs(ratio) > 1.0))
            throw AmplitudeDomainError(
                "OrbitSolution: |E/(a omega)| must exceed 1 for bounded motion; "
                "the limiting value |E| = |a| omega is the constant x = 1/(4 omega)");
        // the first integral gives E = m(x) (xdot^2/2 + ...) with m > 0 on
        // the valid branch, so physical orbits carry positive energy; the
        // amplitude center E/(4 w^2 a) then lies on the branch automatically
        if (!(E > 0.0))
            throw AmplitudeDomainError("OrbitSolution: E must be positive on either branch");
    }

    double amplitude_center() const { return E / (4.0 * params.omega * params.omega * params.a); }
    double modulation() const {
        const double q = params.a * params.omega / E;
        return std::sqrt(1.0 - q * q);
    }
    double x(double t) const {
        return amplitude_center() *
               (1.0 + modulation() * std::sin(2.0 * params.omega * t + theta0));
    }
    double xdot(double t) const {
        return amplitude_center() * modulation() * 2.0 * params.omega *
               std::cos(2.0 * params.omega * t + theta0);
    }
    ClassicalState state(double t) const { return {x(t), xdot(t)}; }
    double x_inner() const { return amplitude_center() * (1.0 - modulation()); }
    double x_outer() const { return amplitude_center() * (1.0 + modulation()); }
    double period() const { return M_PI / params.omega; }
};

inline double analytic_orbit(const OrbitSolution& sol, double t) { return sol.x(t); }

/// Fixed points of the phase flow: (x, xdot) = (branch_sign/(4 omega), 0);
/// they coincide with the potential minimum and are stable.
inline std::vector<ClassicalState> fixed_points(const ModelParams& params) {
    return {ClassicalState{potential_minimizer(params), 0.0}};
}

namespace detail {

// adaptive Simpson with absolute tolerance, for the smooth phase integrand
template <typename F>
double adaptive_simpson(F&& f, double a, double b, double fa, double fm, double fb, double tol,
                        int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, 0.5 * tol, depth - 1);
}

template <typename F>
double integrate_adaptive(F&& f, double a, double b, double tol) {
    const double fa = f(a), fm = f(0.5 * (a + b)), fb = f(b);
    return adaptive_simpson(f, a, b, fa, fm, fb, tol, 28);
}

// locate a zero of g in [lo, hi] (g(lo), g(hi) of opposite sign) by bisection
template <typename F>
double bisect_root(F&& g, double lo, double hi, double t_tol) {
    double glo = g(lo);
    for (int it = 0; it < 200 && hi - lo > t_tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if ((glo <= 0.0) == (gm <= 0.0)) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// Oscillation period from successive maxima of x(t): xdot down-crossings are
/// bracketed on the dense output and refined by bisection to 1e-12 in t, and
/// the gaps between consecutive maxima are averaged. Requires at least three
/// maxima in the span. The result is pi/omega for every admissible energy.
inline double measure_period(const Trajectory& traj) {
    const double t0 = traj.dense.t_begin(), t1 = traj.dense.t_end();
    const double span = t1 - t0;
    // sampling fine enough that consecutive extrema cannot share a cell
    const Eigen::Index n_scan =
        std::max<Eigen::Index>(2048, static_cast<Eigen::Index>(128.0 * span * traj.params.omega));
    auto xdot_at = [&traj](double t) { return traj.dense.component(t, 1); };

    std::vector<double> maxima;
    double t_prev = t0, v_prev = xdot_at(t_prev);
    for (Eigen::Index i = 1; i < n_scan; ++i) {
        const double t = t0 + span * static_cast<double>(i) / (n_scan - 1);
        const double v = xdot_at(t);
        if (v_prev > 0.0 && v <= 0.0)
            maxima.push_back(detail::bisect_root(xdot_at, t_prev, t, 1e-12));
        t_prev = t;
        v_prev = v;
    }
    if (maxima.size() < 3)
        throw InsufficientSpan("measure_period: need at least 3 maxima of x(t); found " +
                               std::to_string(maxima.size()));
    double sum = 0.0;
    for (std::size_t i = 1; i < maxima.size(); ++i) sum += maxima[i] - maxima[i - 1];
    return sum / static_cast<double>(maxima.size() - 1);
}

/// Residual series of the nonlocal linearization X(t) = sqrt|x| exp(i phase),
/// phase' = 1/(4x), i.e. dX/X = dx/(2x) + (i/4x) dt. Along exact solutions
/// Xdd + omega^2 X = 0 identically; the returned residuals measure how well
/// the integrated trajectory satisfies that, with Xdd from an 8th-order
/// central stencil on a uniform resampling and the phase from adaptive
/// quadrature of the dense output.
struct WitnessResult {
    Eigen::ArrayXd times;       // interior sample times (stencil support trimmed)
    Eigen::ArrayXcd X;          // transformed signal at those times
    Eigen::ArrayXd residual;    // |Xdd + omega^2 X|
    double scale = 0.0;         // max |omega^2 X|
    double max_residual = 0.0;
    double max_residual_scaled() const { return max_residual / scale; }
};

inline WitnessResult linearization_witness(const Trajectory& traj,
                                           Eigen::Index n_samples = 4096) {
    if (n_samples < 32) throw std::invalid_argument("linearization_witness: too few samples");
    const double t0 = traj.dense.t_begin(), t1 = traj.dense.t_end();
    const double h = (t1 - t0) / static_cast<double>(n_samples - 1);

    auto inv4x = [&traj](double t) { return 0.25 / traj.dense.component(t, 0); };

    Eigen::ArrayXd ts(n_samples), xs(n_samples), phase(n_samples);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n_samples; ++i) {
        const double t = t0 + h * static_cast<double>(i);
        ts[i] = t;
        xs[i] = traj.dense.component(t, 0);
        if (i > 0) acc += detail::integrate_adaptive(inv4x, ts[i - 1], t, 1e-14);
        phase[i] = acc;
    }

    Eigen::ArrayXcd X(n_samples);
    for (Eigen::Index i = 0; i < n_samples; ++i)
        X[i] = std::sqrt(std::fabs(xs[i])) *
               std::complex<double>(std::cos(phase[i]), std::sin(phase[i]));

    // 8th-order central second-derivative stencil
    static const double c[9] = {-1.0 / 560, 8.0 / 315,  -1.0 / 5, 8.0 / 5, -205.0 / 72,
                                8.0 / 5,    -1.0 / 5,   8.0 / 315, -1.0 / 560};
    const double w2 = traj.params.omega * traj.params.omega;
    const Eigen::Index m = n_samples - 8;
    WitnessResult out;
    out.times.resize(m);
    out.X.resize(m);
    out.residual.resize(m);
    for (Eigen::Index i = 4; i + 4 < n_samples; ++i) {
        std::complex<double> dd(0.0, 0.0);
        for (int j = 0; j < 9; ++j) dd += c[j] * X[i + j - 4];
        dd /= h * h;
        out.times[i - 4] = ts[i];
        out.X[i - 4] = X[i];
        out.residual[i - 4] = std::abs(dd + w2 * X[i]);
    }
    out.scale = (w2 * out.X).abs().maxCoeff();
    out.max_residual = out.residual.maxCoeff();
    return out;
}

/// Residual of the determining equation dF/dx + F^2 + F/(2x) for F = 1/(2x);
/// algebraically zero, evaluated in floating point via dF/dx = -(F/x) and
/// F/(2x) = (F/x)/2 so the cancellation is exact up to a few ulps.
inline double f_equation_residual(double x) {
    const double F = 0.5 / x;
    const double u = F / x;
    return F * F + 0.5 * u - u;
}

/// a -> -a, x -> -x: maps a valid trajectory of `params` to a valid
/// trajectory of the mirrored system; an involution. Energies are unchanged.
inline Trajectory mirror_map(const Trajectory& traj) {
    Trajectory out{traj.params.mirrored()};
    out.times = traj.times;
    out.x = -traj.x;
    out.xdot = -traj.xdot;
    out.energy = traj.energy;
    out.tol = traj.tol;
    out.max_energy_drift = traj.max_energy_drift;
    out.dense = traj.dense.negated();
    return out;
}

}  // namespace pdmosc

#endif  // PDMOSC_CLASSICAL_HPP
