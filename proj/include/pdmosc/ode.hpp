#ifndef PDMOSC_ODE_HPP
#define PDMOSC_ODE_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace pdmosc {

/// Step-size control collapsed below the resolvable scale; usually means the
/// solution is running into a singularity of the vector field.
struct StepSizeUnderflow : std::runtime_error {
    double t;
    explicit StepSizeUnderflow(double t_)
        : std::runtime_error("ODE step size underflow at t = " + std::to_string(t_)), t(t_) {}
};

struct OdeOptions {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    double h_init = 0.0;   // 0 = choose automatically
    double h_max = 0.0;    // 0 = span / 10
    long max_steps = 4000000;
};

/// Piecewise-quartic interpolant produced by the Dormand-Prince pair; valid
/// over the whole integration span, accurate to the order of the embedded
/// method.
template <typename Scalar, int N>
class DenseSolution {
  public:
    using State = Eigen::Array<Scalar, N, 1>;

    struct Segment {
        Scalar t0, h;
        State c0, c1, c2, c3, c4;  // contd5 coefficients
    };

    Scalar t_begin() const noexcept { return t_begin_; }
    Scalar t_end() const noexcept { return t_end_; }
    std::size_t step_count() const noexcept { return segments_.size(); }

    State operator()(Scalar t) const {
        const Segment& s = segment_for(t);
        const Scalar th = (t - s.t0) / s.h;
        const Scalar th1 = Scalar(1) - th;
        return s.c0 + th * (s.c1 + th1 * (s.c2 + th * (s.c3 + th1 * s.c4)));
    }

    Scalar component(Scalar t, int i) const {
        const Segment& s = segment_for(t);
        const Scalar th = (t - s.t0) / s.h;
        const Scalar th1 = Scalar(1) - th;
        return s.c0[i] + th * (s.c1[i] + th1 * (s.c2[i] + th * (s.c3[i] + th1 * s.c4[i])));
    }

    void append(const Segment& s) {
        if (segments_.empty()) t_begin_ = s.t0;
        segments_.push_back(s);
        t_end_ = s.t0 + s.h;
    }

    /// Interpolant of the negated solution; the coefficients are linear in
    /// the state data.
    DenseSolution negated() const {
        DenseSolution out(*this);
        for (Segment& s : out.segments_) {
            s.c0 = -s.c0;
            s.c1 = -s.c1;
            s.c2 = -s.c2;
            s.c3 = -s.c3;
            s.c4 = -s.c4;
        }
        return out;
    }

  private:
    const Segment& segment_for(Scalar t) const {
        if (segments_.empty()) throw std::logic_error("DenseSolution: empty");
        // binary search for the step containing t; clamp to the span
        if (t <= t_begin_) return segments_.front();
        if (t >= t_end_) return segments_.back();
        std::size_t lo = 0, hi = segments_.size() - 1;
        while (lo < hi) {
            const std::size_t mid = (lo + hi + 1) / 2;
            if (segments_[mid].t0 <= t)
                lo = mid;
            else
                hi = mid - 1;
        }
        return segments_[lo];
    }

    std::vector<Segment> segments_;
    Scalar t_begin_ = 0, t_end_ = 0;
};

namespace detail {

// Dormand-Prince 5(4) tableau and the coefficients of its quartic
// interpolant (Hairer, Norsett & Wanner, Solving ODEs I).
template <typename Scalar>
struct Dopri5Tableau {
    static constexpr Scalar c2 = Scalar(1) / 5, c3 = Scalar(3) / 10, c4 = Scalar(4) / 5,
                            c5 = Scalar(8) / 9;
    static constexpr Scalar a21 = Scalar(1) / 5;
    static constexpr Scalar a31 = Scalar(3) / 40, a32 = Scalar(9) / 40;
    static constexpr Scalar a41 = Scalar(44) / 45, a42 = Scalar(-56) / 15, a43 = Scalar(32) / 9;
    static constexpr Scalar a51 = Scalar(19372) / 6561, a52 = Scalar(-25360) / 2187,
                            a53 = Scalar(64448) / 6561, a54 = Scalar(-212) / 729;
    static constexpr Scalar a61 = Scalar(9017) / 3168, a62 = Scalar(-355) / 33,
                            a63 = Scalar(46732) / 5247, a64 = Scalar(49) / 176,
                            a65 = Scalar(-5103) / 18656;
    static constexpr Scalar a71 = Scalar(35) / 384, a73 = Scalar(500) / 1113,
                            a74 = Scalar(125) / 192, a75 = Scalar(-2187) / 6784,
                            a76 = Scalar(11) / 84;
    // error weights = b(5th) - b(4th)
    static constexpr Scalar e1 = Scalar(71) / 57600, e3 = Scalar(-71) / 16695,
                            e4 = Scalar(71) / 1920, e5 = Scalar(-17253) / 339200,
                            e6 = Scalar(22) / 525, e7 = Scalar(-1) / 40;
    // dense-output weights
    static constexpr Scalar d1 = Scalar(-12715105075.0) / 11282082432.0;
    static constexpr Scalar d3 = Scalar(87487479700.0) / 32700410799.0;
    static constexpr Scalar d4 = Scalar(-10690763975.0) / 1880347072.0;
    static constexpr Scalar d5 = Scalar(701980252875.0) / 199316789632.0;
    static constexpr Scalar d6 = Scalar(-1453857185.0) / 822651844.0;
    static constexpr Scalar d7 = Scalar(69997945.0) / 29380423.0;
};

}  // namespace detail

/// Adaptive Dormand-Prince 5(4) integration of dy/dt = rhs(t, y) from t0 to
/// t1 (t1 > t0) with dense output.
///
/// `guard(t, y)` is called on every accepted state; it should throw to abort
/// the integration (e.g. when the state reaches an excluded region). Stages
/// that produce non-finite derivatives simply cause the step to be rejected
/// and retried smaller, so transient excursions of trial stages are harmless.
///
/// `post_step(t, y)` may adjust each accepted state in place before it is
/// committed (manifold projection onto a first integral, say); the FSAL
/// derivative and the dense segment are rebuilt from the adjusted state.
template <typename Scalar, int N, typename Rhs, typename Guard, typename PostStep>
DenseSolution<Scalar, N> integrate_dopri5(Rhs&& rhs, Eigen::Array<Scalar, N, 1> y, Scalar t0,
                                          Scalar t1, const OdeOptions& opts, Guard&& guard,
                                          PostStep&& post_step) {
    using State = Eigen::Array<Scalar, N, 1>;
    using T = detail::Dopri5Tableau<Scalar>;

    if (!(t1 > t0)) throw std::invalid_argument("integrate_dopri5: need t1 > t0");

    DenseSolution<Scalar, N> dense;
    Scalar t = t0;
    guard(t, y);

    State k1 = rhs(t, y);
    const Scalar span = t1 - t0;
    const Scalar h_max = opts.h_max > 0 ? opts.h_max : span / 10;
    Scalar h = opts.h_init > 0 ? opts.h_init : std::min(h_max, span / 100);

    bool last_rejected = false;
    for (long step = 0; step < opts.max_steps; ++step) {
        if (t >= t1) return dense;
        h = std::min(h, t1 - t);
        if (!(h > std::fabs(t) * std::numeric_limits<Scalar>::epsilon() * 4) ||
            h < std::numeric_limits<Scalar>::min() * 1e4)
            throw StepSizeUnderflow(static_cast<double>(t));

        const State k2 = rhs(t + T::c2 * h, (y + h * (T::a21 * k1)).eval());
        const State k3 = rhs(t + T::c3 * h, (y + h * (T::a31 * k1 + T::a32 * k2)).eval());
        const State k4 =
            rhs(t + T::c4 * h, (y + h * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3)).eval());
        const State k5 = rhs(
            t + T::c5 * h,
            (y + h * (T::a51 * k1 + T::a52 * k2 + T::a53 * k3 + T::a54 * k4)).eval());
        const State k6 =
            rhs(t + h, (y + h * (T::a61 * k1 + T::a62 * k2 + T::a63 * k3 + T::a64 * k4 +
                                 T::a65 * k5))
                           .eval());
        State y1 =
            y + h * (T::a71 * k1 + T::a73 * k3 + T::a74 * k4 + T::a75 * k5 + T::a76 * k6);
        State k7 = rhs(t + h, y1);

        const State err_vec =
            h * (T::e1 * k1 + T::e3 * k3 + T::e4 * k4 + T::e5 * k5 + T::e6 * k6 + T::e7 * k7);
        Scalar err = 0;
        bool finite = y1.isFinite().all();
        if (finite) {
            for (int i = 0; i < N; ++i) {
                const Scalar sc =
                    opts.abs_tol +
                    opts.rel_tol * std::max(std::fabs(y[i]), std::fabs(y1[i]));
                const Scalar q = err_vec[i] / sc;
                err += q * q;
            }
            err = std::sqrt(err / N);
            finite = std::isfinite(err);
        }

        if (finite && err <= Scalar(1)) {
            // accept: adjust the state, then record the dense segment
            {
                const State before = y1;
                post_step(t + h, y1);
                if ((y1 != before).any()) k7 = rhs(t + h, y1);
            }
            typename DenseSolution<Scalar, N>::Segment seg;
            const State ydiff = y1 - y;
            const State bspl = h * k1 - ydiff;
            seg.t0 = t;
            seg.h = h;
            seg.c0 = y;
            seg.c1 = ydiff;
            seg.c2 = bspl;
            seg.c3 = ydiff - h * k7 - bspl;
            seg.c4 = h * (T::d1 * k1 + T::d3 * k3 + T::d4 * k4 + T::d5 * k5 + T::d6 * k6 +
                          T::d7 * k7);
            dense.append(seg);

            t += h;
            y = y1;
            k1 = k7;  // FSAL
            guard(t, y);

            const Scalar fac =
                std::min(last_rejected ? Scalar(1) : Scalar(5),
                         std::max(Scalar(0.2), Scalar(0.9) * std::pow(std::max(err, Scalar(1e-30)),
                                                                      Scalar(-0.2))));
            h = std::min(h * fac, h_max);
            last_rejected = false;
        } else {
            const Scalar fac =
                finite ? std::max(Scalar(0.1), Scalar(0.9) * std::pow(err, Scalar(-0.2)))
                       : Scalar(0.1);
            h *= fac;
            last_rejected = true;
        }
    }
    throw std::runtime_error("integrate_dopri5: max step count exceeded");
}

template <typename Scalar, int N, typename Rhs, typename Guard>
DenseSolution<Scalar, N> integrate_dopri5(Rhs&& rhs, Eigen::Array<Scalar, N, 1> y, Scalar t0,
                                          Scalar t1, const OdeOptions& opts, Guard&& guard) {
    return integrate_dopri5<Scalar, N>(std::forward<Rhs>(rhs), std::move(y), t0, t1, opts,
                                       std::forward<Guard>(guard),
                                       [](Scalar, Eigen::Array<Scalar, N, 1>&) {});
}

}  // namespace pdmosc

#endif  // PDMOSC_ODE_HPP
