#ifndef PDMOSC_SPECFUN_HPP
#define PDMOSC_SPECFUN_HPP

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <utility>

namespace pdmosc {

/// A Gauss-Legendre node failed to converge (not expected for order <= 1e4).
struct NonConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// (x)_k = x (x+1) ... (x+k-1), with (x)_0 = 1.
template <typename Scalar>
Scalar pochhammer(Scalar x, int k) {
    Scalar p(1);
    for (int i = 0; i < k; ++i) p *= x + Scalar(i);
    return p;
}

namespace detail {

// The alternating series below loses up to ten digits to cancellation in the
// oscillatory region (large z, large n), so the float/double instantiations
// accumulate in a wider type; the public precision is then limited only by
// the final rounding.
template <typename Scalar>
struct wide_accumulator {
    using type = Scalar;
};
#if defined(__SIZEOF_FLOAT128__)
template <>
struct wide_accumulator<double> {
    using type = __float128;
};
#else
template <>
struct wide_accumulator<double> {
    using type = long double;
};
#endif
template <>
struct wide_accumulator<float> {
    using type = double;
};

}  // namespace detail

/// Terminating confluent hypergeometric series
///   1F1(-n; b; z) = sum_{k=0}^{n} (-n)_k z^k / ((b)_k k!),
/// accumulated forward with the term recurrence and compensated summation in
/// a widened carry type. Only the polynomial branch is provided: n is a
/// quantum number here, so there are no convergence concerns. b must not be
/// a nonpositive integer.
template <typename Scalar>
Scalar kummer_terminating(int n, Scalar b, Scalar z) {
    if (n < 0) throw std::domain_error("kummer_terminating: n must be >= 0");
    if (b <= Scalar(0) && std::fabs(b - std::nearbyint(b)) < Scalar(1e-12))
        throw std::domain_error("kummer_terminating: b must not be a nonpositive integer");
    using Acc = typename detail::wide_accumulator<Scalar>::type;
    Acc sum(1), comp(0), term(1);
    const Acc bw(b), zw(z);
    for (int k = 0; k < n; ++k) {
        term *= (Acc(-n + k) * zw) / ((bw + Acc(k)) * Acc(k + 1));
        const Acc y = term - comp;
        const Acc t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return static_cast<Scalar>(sum);
}

/// Associated Laguerre polynomial L_n^{(alpha)}(z) by the three-term
/// recurrence; related to the series above by
///   1F1(-n; alpha+1; z) = n! / (alpha+1)_n * L_n^{(alpha)}(z).
template <typename Scalar>
Scalar assoc_laguerre(int n, Scalar alpha, Scalar z) {
    if (n < 0) throw std::domain_error("assoc_laguerre: n must be >= 0");
    if (n == 0) return Scalar(1);
    Scalar lm1(1);
    Scalar l = Scalar(1) + alpha - z;
    for (int k = 1; k < n; ++k) {
        const Scalar lp1 =
            ((Scalar(2 * k + 1) + alpha - z) * l - (Scalar(k) + alpha) * lm1) / Scalar(k + 1);
        lm1 = l;
        l = lp1;
    }
    return l;
}

/// Gauss-Legendre rule on (-1, 1): weights sum to 2, exact for polynomials of
/// degree <= 2*order - 1.
template <typename Scalar = double>
struct QuadratureRule {
    Eigen::Array<Scalar, Eigen::Dynamic, 1> nodes;
    Eigen::Array<Scalar, Eigen::Dynamic, 1> weights;
    int order = 0;

    /// Nodes and weights affinely mapped to [lo, hi].
    std::pair<Eigen::Array<Scalar, Eigen::Dynamic, 1>, Eigen::Array<Scalar, Eigen::Dynamic, 1>>
    mapped(Scalar lo, Scalar hi) const {
        const Scalar half = (hi - lo) / Scalar(2), mid = (hi + lo) / Scalar(2);
        return {mid + half * nodes, half * weights};
    }

    template <typename F>
    Scalar integrate(F&& f, Scalar lo, Scalar hi) const {
        const Scalar half = (hi - lo) / Scalar(2), mid = (hi + lo) / Scalar(2);
        Scalar acc(0);
        for (int i = 0; i < order; ++i) acc += weights[i] * f(mid + half * nodes[i]);
        return half * acc;
    }
};

/// Nodes by Newton iteration on P_n from the usual cosine initial guesses,
/// weights w = 2 / ((1 - x^2) P_n'(x)^2).
template <typename Scalar = double>
QuadratureRule<Scalar> gauss_legendre(int order) {
    if (order < 1) throw std::domain_error("gauss_legendre: order must be >= 1");
    QuadratureRule<Scalar> rule;
    rule.order = order;
    rule.nodes.resize(order);
    rule.weights.resize(order);

    const Scalar eps = std::numeric_limits<Scalar>::epsilon();
    for (int i = 0; i < (order + 1) / 2; ++i) {
        Scalar x = std::cos(Scalar(M_PI) * (Scalar(i) + Scalar(0.75)) / (Scalar(order) + Scalar(0.5)));
        Scalar dp = 0;
        bool converged = false;
        for (int it = 0; it < 100; ++it) {
            // Legendre recurrence for P_n(x) and P_n'(x)
            Scalar p0(1), p1 = x;
            for (int k = 2; k <= order; ++k) {
                const Scalar p2 =
                    ((Scalar(2 * k - 1)) * x * p1 - Scalar(k - 1) * p0) / Scalar(k);
                p0 = p1;
                p1 = p2;
            }
            dp = Scalar(order) * (x * p1 - p0) / (x * x - Scalar(1));
            const Scalar dx = p1 / dp;
            x -= dx;
            if (std::fabs(dx) <= Scalar(4) * eps * (Scalar(1) + std::fabs(x))) {
                converged = true;
                break;
            }
        }
        if (!converged)
            throw NonConvergence("gauss_legendre: Newton iteration failed for a node of order " +
                                 std::to_string(order));
        rule.nodes[i] = -x;
        rule.nodes[order - 1 - i] = x;
        const Scalar w = Scalar(2) / ((Scalar(1) - x * x) * dp * dp);
        rule.weights[i] = w;
        rule.weights[order - 1 - i] = w;
    }
    if (order % 2 == 1) rule.nodes[order / 2] = Scalar(0);  // exact midpoint
    return rule;
}

/// Composite rule on [0, hi] with panels graded geometrically toward 0, for
/// integrands with algebraic (non-analytic) behaviour at the origin.
template <typename Scalar, typename F>
Scalar integrate_graded(F&& f, Scalar hi, const QuadratureRule<Scalar>& rule, int levels = 8) {
    Scalar acc(0);
    Scalar right = hi;
    for (int l = 0; l < levels; ++l) {
        const Scalar left = (l + 1 == levels) ? Scalar(0) : right / Scalar(2);
        acc += rule.integrate(f, left, right);
        right = left;
    }
    return acc;
}

}  // namespace pdmosc

#endif  // PDMOSC_SPECFUN_HPP
