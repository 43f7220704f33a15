#ifndef PDMOSC_QUANTUM_HPP
#define PDMOSC_QUANTUM_HPP

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "pdmosc/model.hpp"
#include "pdmosc/specfun.hpp"

namespace pdmosc {

/// a^2 + epsilon < 1/4: the effective inverse-square coupling is too
/// attractive and no normalizable bound states exist.
struct BoundStateViolation : std::domain_error {
    using std::domain_error::domain_error;
};

/// The normalization integral came out non-finite or non-positive.
struct QuadratureFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Everything the quantized problem needs: model parameters, the von Roos
/// triple, and the auxiliary constant mass m0 > 0 introduced by the
/// constant-mass reduction. m0 is a gauge choice: energies are independent of
/// it and x-space wavefunction shapes are invariant up to normalization.
class QuantumConfig {
  public:
    QuantumConfig(const ModelParams& params, const AmbiguityTriple& ambiguity, double m0 = 1.0)
        : params_(params), ambiguity_(ambiguity), m0_(m0) {
        if (!(m0 > 0.0) || !std::isfinite(m0))
            throw std::invalid_argument("QuantumConfig: m0 must be positive and finite");
        if (!bound_state_condition(params.a, ambiguity.epsilon()))
            throw BoundStateViolation(
                "QuantumConfig: bound-state condition a^2 + epsilon >= 1/4 violated "
                "(a^2 + epsilon = " +
                std::to_string(params.a * params.a + ambiguity.epsilon()) + ")");
    }

    const ModelParams& params() const noexcept { return params_; }
    const AmbiguityTriple& ambiguity() const noexcept { return ambiguity_; }
    double m0() const noexcept { return m0_; }
    double epsilon() const noexcept { return ambiguity_.epsilon(); }

    /// Scale of the x = eta xi^2 substitution, eta = m0/(4a).
    double eta() const noexcept { return m0_ / (4.0 * params_.a); }

    /// Exponent of the small-xi behaviour, nu = 1/2 + sqrt(a^2 + epsilon);
    /// the positive square root is taken (the negative root is not
    /// normalizable away from the boundary case).
    double nu() const noexcept {
        return 0.5 + std::sqrt(params_.a * params_.a + epsilon());
    }

    /// a^2 + epsilon == 1/4 within 1e-12: accepted, but the singular endpoint
    /// is limit-circle there and results are marked reduced-confidence.
    bool boundary_case() const noexcept {
        return params_.a * params_.a + epsilon() - 0.25 < 1e-12;
    }

  private:
    ModelParams params_;
    AmbiguityTriple ambiguity_;
    double m0_;
};

/// Isotonic effective potential of the reduced constant-mass problem:
/// V_eff(xi) = m0 w^2 xi^2 / 2 + (a^2 + eps - 1/4) / (2 m0 xi^2).
inline double effective_potential(double xi, const QuantumConfig& cfg) {
    if (!(xi > 0.0)) throw std::domain_error("effective_potential: xi must be positive");
    const double w = cfg.params().omega;
    const double g = cfg.params().a * cfg.params().a + cfg.epsilon() - 0.25;
    return 0.5 * cfg.m0() * w * w * xi * xi + g / (2.0 * cfg.m0() * xi * xi);
}

inline Eigen::ArrayXd effective_potential(const Eigen::ArrayXd& xi, const QuantumConfig& cfg) {
    Eigen::ArrayXd out(xi.size());
    for (Eigen::Index i = 0; i < xi.size(); ++i) out[i] = effective_potential(xi[i], cfg);
    return out;
}

/// Minimizer of V_eff away from the boundary case: xi* = g^{1/4}/sqrt(m0 w).
inline double effective_potential_minimizer(const QuantumConfig& cfg) {
    const double g = cfg.params().a * cfg.params().a + cfg.epsilon() - 0.25;
    return std::pow(g, 0.25) / std::sqrt(cfg.m0() * cfg.params().omega);
}

/// xi(x) = sqrt(x/eta); bijective between the branch half-line and xi > 0.
inline double coordinate_map(double x, const QuantumConfig& cfg) {
    const double r = x / cfg.eta();
    if (!(r > 0.0)) throw std::domain_error("coordinate_map: x/eta must be positive");
    return std::sqrt(r);
}

/// x(xi) = eta xi^2.
inline double inverse_map(double xi, const QuantumConfig& cfg) {
    if (!(xi > 0.0)) throw std::domain_error("inverse_map: xi must be positive");
    return cfg.eta() * xi * xi;
}

/// E_n = w (2n + 1 + sqrt(a^2 + epsilon)); independent of m0, equispaced
/// with gap 2w for every admissible ambiguity triple.
inline double analytic_energy(int n, const QuantumConfig& cfg) {
    if (n < 0) throw std::domain_error("analytic_energy: n must be >= 0");
    const double s = std::sqrt(cfg.params().a * cfg.params().a + cfg.epsilon());
    return cfg.params().omega * (2.0 * n + 1.0 + s);
}

/// Indexed eigenvalues with provenance.
struct SpectrumTable {
    struct Level {
        int n;
        double energy;
    };
    std::vector<Level> levels;
    std::string method;    // "analytic" | "xi-grid" | "x-grid" (+ refinements)
    std::string metadata;  // grid descriptor or "closed-form"
};

/// Closed-form spectrum for levels 0..k-1. Levels are snapped to the ulp
/// grid of the top level: a straight rounding of w(2n+1+s) drifts by one ulp
/// across binade boundaries, which would break the bit-exact equality of
/// consecutive gaps. On the common grid the snap moves each level by at most
/// half an ulp of the top level while E_{n+1} - E_n == 2w holds bit-exactly
/// whenever 2w n is representable on that grid (all dyadic w in particular).
inline SpectrumTable analytic_spectrum(const QuantumConfig& cfg, int k) {
    if (k < 0) throw std::domain_error("analytic_spectrum: k must be >= 0");
    SpectrumTable table;
    table.method = "analytic";
    table.metadata = "closed-form";
    if (k == 0) return table;
    const double two_w = 2.0 * cfg.params().omega;
    const double e0 = analytic_energy(0, cfg);
    const double top = e0 + two_w * (k - 1);
    const double grid = std::ldexp(1.0, std::ilogb(top) - 52);
    const double e0_snapped = std::nearbyint(e0 / grid) * grid;
    table.levels.reserve(k);
    for (int n = 0; n < k; ++n) table.levels.push_back({n, e0_snapped + two_w * n});
    return table;
}

namespace detail {

// phi_n up to normalization: xi^nu e^{-s xi^2 / 2} 1F1(-n; nu + 1/2; s xi^2)
inline double phi_unnormalized(int n, double nu, double s, double xi) {
    const double z = s * xi * xi;
    return std::pow(xi, nu) * std::exp(-0.5 * z) * kummer_terminating(n, nu + 0.5, z);
}

// Truncation point: beyond it the integrand xi^{2nu+4n} e^{-s xi^2} of the
// normalization integral is below 1e-40, so the discarded tail is bounded by
// xi_max * 1e-40. Solved by fixed-point iteration on
//   s xi^2 = 40 ln 10 + (2 nu + 4n) ln xi.
inline double tail_cutoff(int n, double nu, double s) {
    const double target = 40.0 * std::log(10.0);
    const double p = 2.0 * nu + 4.0 * n;
    double xi = std::sqrt(target / s) + 1.0;
    for (int it = 0; it < 6; ++it)
        xi = std::sqrt((target + p * std::log(std::max(xi, 2.0))) / s);
    return xi;
}

}  // namespace detail

/// Normalization constant c_n > 0 with \int_0^infty phi_n(xi)^2 dxi = 1
/// (plain measure in the xi coordinate), computed by graded Gauss-Legendre
/// quadrature on [0, cutoff]. The sign convention makes phi_n positive as
/// xi -> 0+.
inline double normalize(int n, const QuantumConfig& cfg) {
    if (n < 0) throw std::domain_error("normalize: n must be >= 0");
    const double nu = cfg.nu();
    const double s = cfg.m0() * cfg.params().omega;
    const double cutoff = detail::tail_cutoff(n, nu, s);
    static const QuadratureRule<double> rule = gauss_legendre<double>(48);
    const double norm2 = integrate_graded<double>(
        [&](double xi) {
            const double v = detail::phi_unnormalized(n, nu, s, xi);
            return v * v;
        },
        cutoff, rule, 10);
    if (!std::isfinite(norm2) || !(norm2 > 0.0))
        throw QuadratureFailure("normalize: normalization integral came out " +
                                std::to_string(norm2));
    return 1.0 / std::sqrt(norm2);
}

enum class WfCoordinate { xi, x };

/// Analytic eigenfunction of level n. phi lives in the xi coordinate with
/// unit plain-measure norm; psi(x) = phi(xi(x)) / sqrt(xi(x)) is the
/// wavefunction of the original problem, with \int psi^2 dx = 2 eta.
struct Wavefunction {
    int n;
    double nu;
    double c;  // normalization constant, > 0
    WfCoordinate coordinate;
    QuantumConfig cfg;

    double phi(double xi) const {
        if (!(xi > 0.0)) throw std::domain_error("Wavefunction::phi: xi must be positive");
        return c * detail::phi_unnormalized(n, nu, cfg.m0() * cfg.params().omega, xi);
    }

    double psi(double x) const {
        const double xi = coordinate_map(x, cfg);
        return phi(xi) / std::sqrt(xi);
    }

    double operator()(double u) const { return coordinate == WfCoordinate::xi ? phi(u) : psi(u); }

    Eigen::ArrayXd phi(const Eigen::ArrayXd& xi) const {
        Eigen::ArrayXd out(xi.size());
        for (Eigen::Index i = 0; i < xi.size(); ++i) out[i] = phi(xi[i]);
        return out;
    }

    Eigen::ArrayXd psi(const Eigen::ArrayXd& x) const {
        Eigen::ArrayXd out(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = psi(x[i]);
        return out;
    }
};

inline Wavefunction make_wavefunction(int n, const QuantumConfig& cfg,
                                      WfCoordinate coordinate = WfCoordinate::xi) {
    return Wavefunction{n, cfg.nu(), normalize(n, cfg), coordinate, cfg};
}

inline double wavefunction_phi(int n, double xi, const QuantumConfig& cfg) {
    return make_wavefunction(n, cfg).phi(xi);
}

inline double wavefunction_psi(int n, double x, const QuantumConfig& cfg) {
    return make_wavefunction(n, cfg).psi(x);
}

namespace detail {

// 8th-order central stencils
inline const double kD1[9] = {1.0 / 280,  -4.0 / 105, 1.0 / 5,  -4.0 / 5, 0.0,
                              4.0 / 5,    -1.0 / 5,   4.0 / 105, -1.0 / 280};
inline const double kD2[9] = {-1.0 / 560, 8.0 / 315, -1.0 / 5, 8.0 / 5, -205.0 / 72,
                              8.0 / 5,    -1.0 / 5,  8.0 / 315, -1.0 / 560};

template <typename F>
void fd_derivatives(F&& f, double u, double h, double& d1, double& d2) {
    double vals[9];
    for (int j = 0; j < 9; ++j) vals[j] = f(u + (j - 4) * h);
    d1 = 0.0;
    d2 = 0.0;
    for (int j = 0; j < 9; ++j) {
        d1 += kD1[j] * vals[j];
        d2 += kD2[j] * vals[j];
    }
    d1 /= h;
    d2 /= h * h;
}

}  // namespace detail

/// Residuals of the reduced constant-mass equation
///   -phi''/(2 m0) + V_eff phi - E_n phi
/// at the given xi samples, with phi'' from an 8th-order stencil (independent
/// of the series algebra). Returned magnitudes are scaled by
/// |E_n| * max |phi| over the sample set.
inline Eigen::ArrayXd tise_xi_residual(int n, const QuantumConfig& cfg,
                                       const Eigen::ArrayXd& xi) {
    const Wavefunction wf = make_wavefunction(n, cfg);
    const double energy = analytic_energy(n, cfg);
    Eigen::ArrayXd res(xi.size());
    double max_phi = 0.0;
    for (Eigen::Index i = 0; i < xi.size(); ++i) {
        const double u = xi[i];
        const double h = std::min(u / 16.0, 0.01 * (1.0 + u));
        double d1, d2;
        detail::fd_derivatives([&wf](double v) { return wf.phi(v); }, u, h, d1, d2);
        const double phi = wf.phi(u);
        max_phi = std::max(max_phi, std::fabs(phi));
        res[i] = -d2 / (2.0 * cfg.m0()) + (effective_potential(u, cfg) - energy) * phi;
    }
    return res.abs() / (std::fabs(energy) * max_phi);
}

/// Residuals of the original position-dependent-mass equation in x space,
///   x psi'' + psi' - (eps/4x) psi + 2a (E_n - V(x)) psi
/// (the ordering parameters enter through alpha(alpha+beta+1) = -eps/4).
/// Confirms that the xi-space solution solves the untransformed problem.
/// Scaled by |2 a E_n| * max |psi| over the sample set.
inline Eigen::ArrayXd tise_xspace_residual(int n, const QuantumConfig& cfg,
                                           const Eigen::ArrayXd& x) {
    const Wavefunction wf = make_wavefunction(n, cfg);
    const double energy = analytic_energy(n, cfg);
    const double eps = cfg.epsilon();
    const double a = cfg.params().a;
    Eigen::ArrayXd res(x.size());
    double max_psi = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double u = x[i];
        const double h = u / 20.0;
        double d1, d2;
        detail::fd_derivatives([&wf](double v) { return wf.psi(v); }, u, h, d1, d2);
        const double psi = wf.psi(u);
        max_psi = std::max(max_psi, std::fabs(psi));
        res[i] = u * d2 + d1 - eps / (4.0 * u) * psi +
                 2.0 * a * (energy - potential(u, cfg.params())) * psi;
    }
    return res.abs() / (std::fabs(2.0 * a * energy) * max_psi);
}

/// Number of interior sign changes of phi_n on (0, hi), with a relative
/// deadband of 1e-12 around zero so near-tangencies are not double counted.
inline int count_nodes(const Wavefunction& wf, double hi, Eigen::Index n_grid = 20000) {
    const Eigen::ArrayXd xi =
        Eigen::ArrayXd::LinSpaced(n_grid, hi / static_cast<double>(n_grid), hi);
    const Eigen::ArrayXd vals = wf.phi(xi);
    const double deadband = 1e-12 * vals.abs().maxCoeff();
    int count = 0;
    double prev = 0.0;
    for (Eigen::Index i = 0; i < n_grid; ++i) {
        const double v = vals[i];
        if (std::fabs(v) <= deadband) continue;
        if (prev != 0.0 && ((prev > 0.0) != (v > 0.0))) ++count;
        prev = v;
    }
    return count;
}

}  // namespace pdmosc

#endif  // PDMOSC_QUANTUM_HPP
