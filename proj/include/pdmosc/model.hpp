#ifndef PDMOSC_MODEL_HPP
#define PDMOSC_MODEL_HPP

#include <cmath>
#include <stdexcept>
#include <string>

namespace pdmosc {

/// Which half-line of the real axis the dynamics lives on. The mass and the
/// potential are both singular at x = 0, so the two branches never connect.
enum class Branch { positive, negative };

inline const char* to_string(Branch b) {
    return b == Branch::positive ? "positive" : "negative";
}

/// Physical parameters of the singular-mass oscillator: angular frequency
/// omega > 0 and mass-scale constant a != 0 in m(x) = a/x,
/// V(x) = a (2 omega^2 x + 1/8x).
///
/// The sign of a is coupled to the branch: a > 0 gives positive mass on
/// x > 0, a < 0 gives positive mass on x < 0. Evaluations inside the wall
/// |x| < wall are rejected rather than returning huge values.
struct ModelParams {
    double omega;
    double a;
    Branch branch;
    double wall = 1e-12;

    ModelParams(double omega_, double a_)
        : ModelParams(omega_, a_, a_ > 0 ? Branch::positive : Branch::negative) {}

    ModelParams(double omega_, double a_, Branch branch_, double wall_ = 1e-12)
        : omega(omega_), a(a_), branch(branch_), wall(wall_) {
        if (!(omega > 0.0) || !std::isfinite(omega))
            throw std::invalid_argument("ModelParams: omega must be positive and finite");
        if (!(a != 0.0) || !std::isfinite(a))
            throw std::invalid_argument("ModelParams: a must be nonzero and finite");
        const bool mass_positive = (branch == Branch::positive) ? (a > 0.0) : (a < 0.0);
        if (!mass_positive)
            throw std::invalid_argument(
                "ModelParams: sign(a) must match the branch so that m(x) = a/x > 0 "
                "(a > 0 on the positive branch, a < 0 on the negative branch)");
        if (!(wall > 0.0))
            throw std::invalid_argument("ModelParams: wall must be positive");
    }

    double branch_sign() const noexcept { return branch == Branch::positive ? 1.0 : -1.0; }

    bool contains(double x) const noexcept {
        return branch == Branch::positive ? x >= wall : x <= -wall;
    }

    void require_domain(double x) const {
        if (!contains(x))
            throw std::domain_error("x = " + std::to_string(x) + " outside the " +
                                    std::string(to_string(branch)) +
                                    " branch domain (singular at x = 0)");
    }

    /// a -> -a, branch flipped; the dynamics is invariant under this map
    /// combined with x -> -x.
    ModelParams mirrored() const {
        return ModelParams(omega, -a,
                           branch == Branch::positive ? Branch::negative : Branch::positive,
                           wall);
    }
};

/// von Roos ordering exponents (alpha, beta, gamma) with
/// alpha + beta + gamma = -1. Observables depend on them only through
/// epsilon = 4 alpha gamma.
class AmbiguityTriple {
  public:
    /// gamma is derived as -1 - alpha - beta, so the constraint holds by
    /// construction.
    AmbiguityTriple(double alpha, double beta)
        : alpha_(alpha), beta_(beta), gamma_(-1.0 - alpha - beta) {
        if (!std::isfinite(alpha_) || !std::isfinite(beta_))
            throw std::invalid_argument("AmbiguityTriple: parameters must be finite");
    }

    /// Full-triple constructor; rejects violations of the sum rule beyond 1e-12.
    AmbiguityTriple(double alpha, double beta, double gamma)
        : alpha_(alpha), beta_(beta), gamma_(gamma) {
        if (!std::isfinite(alpha_) || !std::isfinite(beta_) || !std::isfinite(gamma_))
            throw std::invalid_argument("AmbiguityTriple: parameters must be finite");
        if (std::fabs(alpha_ + beta_ + gamma_ + 1.0) > 1e-12)
            throw std::invalid_argument(
                "AmbiguityTriple: alpha + beta + gamma must equal -1 (within 1e-12)");
    }

    double alpha() const noexcept { return alpha_; }
    double beta() const noexcept { return beta_; }
    double gamma() const noexcept { return gamma_; }
    double epsilon() const noexcept { return 4.0 * alpha_ * gamma_; }

  private:
    double alpha_, beta_, gamma_;
};

/// A point of the (x, xdot) phase plane.
struct ClassicalState {
    double x;
    double xdot;
};

/// m(x) = a/x.
inline double mass_profile(double x, const ModelParams& params) {
    params.require_domain(x);
    return params.a / x;
}

/// V(x) = a (2 omega^2 x + 1/(8x)); minimum a*omega at x = 1/(4 omega) on the
/// positive branch.
inline double potential(double x, const ModelParams& params) {
    params.require_domain(x);
    return params.a * (2.0 * params.omega * params.omega * x + 1.0 / (8.0 * x));
}

/// Location of the potential minimum (the fixed point of the dynamics).
inline double potential_minimizer(const ModelParams& params) noexcept {
    return params.branch_sign() / (4.0 * params.omega);
}

/// H(x, p) = x p^2 / (2a) + V(x).
inline double hamiltonian(double x, double p, const ModelParams& params) {
    params.require_domain(x);
    return x * p * p / (2.0 * params.a) +
           params.a * (2.0 * params.omega * params.omega * x + 1.0 / (8.0 * x));
}

/// H from a phase-plane state via the momentum map p = a xdot / x.
inline double hamiltonian(const ClassicalState& state, const ModelParams& params) {
    params.require_domain(state.x);
    return hamiltonian(state.x, params.a * state.xdot / state.x, params);
}

struct LienardCoefficients {
    double f;  // coefficient of xdot^2, = m'/(2m) = -1/(2x)
    double g;  // = V'/m = 2 omega^2 x - 1/(8x)
};

/// Coefficients of the equivalent xddot + f(x) xdot^2 + g(x) = 0 form.
inline LienardCoefficients lienard_coefficients(double x, const ModelParams& params) {
    params.require_domain(x);
    return {-1.0 / (2.0 * x), 2.0 * params.omega * params.omega * x - 1.0 / (8.0 * x)};
}

inline double epsilon_from_ambiguity(const AmbiguityTriple& t) noexcept {
    return t.epsilon();
}

/// Normalizable bound states exist iff a^2 + epsilon >= 1/4.
inline bool bound_state_condition(double a, double epsilon) noexcept {
    return a * a + epsilon >= 0.25;
}

}  // namespace pdmosc

#endif  // PDMOSC_MODEL_HPP
