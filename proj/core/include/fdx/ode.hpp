#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>

namespace fdx::ode {

template <std::size_t D>
using State = std::array<double, D>;

/// Step-size control settings for Dopri5.
///
/// The error norm is the RMS of e_i / (atol_i + rtol·max(|y_i|, |y_i^new|)).
/// Setting atol_i to zero gives pure relative control on component i, which is
/// what the phase-space coordinates x and z need when they are tiny.
template <std::size_t D>
struct Options {
    double rtol = 1e-10;
    State<D> atol{};
    double h_init = 0.0;  // 0 selects the Hairer-Wanner starting step
    double h_min = 1e-14;
    double h_max = std::numeric_limits<double>::infinity();
    double safety = 0.9;
    long max_steps = 2'000'000;
};

/// Continuous extension of one accepted step (Hairer's contd5 layout).
template <std::size_t D>
struct DenseStep {
    double t0 = 0.0;
    double h = 0.0;
    std::array<State<D>, 5> r{};

    double t1() const noexcept { return t0 + h; }

    State<D> operator()(double t) const noexcept {
        const double th = (t - t0) / h;
        const double th1 = 1.0 - th;
        State<D> y;
        for (std::size_t i = 0; i < D; ++i)
            y[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        return y;
    }
};

enum class Status { Ok, StepUnderflow, NonFinite, MaxSteps };

/// Dormand-Prince 5(4) with FSAL, PI-free step control and 4th-order dense
/// output. Advances one accepted step per call to step().
template <std::size_t D, class F>
class Dopri5 {
public:
    using Y = State<D>;

    Dopri5(F rhs, double t0, const Y& y0, const Options<D>& opt)
        : f_(std::move(rhs)), opt_(opt), t_(t0), y_(y0) {
        k1_ = f_(t_, y_);
        h_ = opt_.h_init > 0.0 ? opt_.h_init : initial_step();
    }

    double t() const noexcept { return t_; }
    const Y& y() const noexcept { return y_; }
    const Y& dydt() const noexcept { return k1_; }
    double h_next() const noexcept { return h_; }
    long accepted() const noexcept { return n_accepted_; }
    long rejected() const noexcept { return n_rejected_; }
    const DenseStep<D>& dense() const noexcept { return dense_; }

    /// One accepted step, never past t_limit.
    Status step(double t_limit) {
        if (n_accepted_ + n_rejected_ >= opt_.max_steps) return Status::MaxSteps;
        for (;;) {
            double h = std::min(h_, opt_.h_max);
            bool last = false;
            if (t_ + h >= t_limit) {
                h = t_limit - t_;
                last = true;
            }
            if (h < opt_.h_min * std::max(1.0, std::abs(t_))) return Status::StepUnderflow;

            Y k2, k3, k4, k5, k6, k7, y1, ys;
            for (std::size_t i = 0; i < D; ++i) ys[i] = y_[i] + h * a21 * k1_[i];
            k2 = f_(t_ + c2 * h, ys);
            for (std::size_t i = 0; i < D; ++i) ys[i] = y_[i] + h * (a31 * k1_[i] + a32 * k2[i]);
            k3 = f_(t_ + c3 * h, ys);
            for (std::size_t i = 0; i < D; ++i)
                ys[i] = y_[i] + h * (a41 * k1_[i] + a42 * k2[i] + a43 * k3[i]);
            k4 = f_(t_ + c4 * h, ys);
            for (std::size_t i = 0; i < D; ++i)
                ys[i] = y_[i] + h * (a51 * k1_[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
            k5 = f_(t_ + c5 * h, ys);
            for (std::size_t i = 0; i < D; ++i)
                ys[i] = y_[i] +
                        h * (a61 * k1_[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
            k6 = f_(t_ + h, ys);
            for (std::size_t i = 0; i < D; ++i)
                y1[i] = y_[i] +
                        h * (a71 * k1_[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
            k7 = f_(t_ + h, y1);

            double err = 0.0;
            bool finite = true;
            for (std::size_t i = 0; i < D; ++i) {
                const double e = h * (e1 * k1_[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                      e6 * k6[i] + e7 * k7[i]);
                const double sc =
                    opt_.atol[i] + opt_.rtol * std::max(std::abs(y_[i]), std::abs(y1[i]));
                const double r = sc > 0.0 ? e / sc : (e == 0.0 ? 0.0 : HUGE_VAL);
                err += r * r;
                if (!std::isfinite(y1[i]) || !std::isfinite(k7[i])) finite = false;
            }
            err = std::sqrt(err / static_cast<double>(D));
            if (!finite || !std::isfinite(err)) {
                ++n_rejected_;
                h_ = 0.25 * h;
                if (h_ < opt_.h_min * std::max(1.0, std::abs(t_))) return Status::NonFinite;
                continue;
            }

            if (err <= 1.0) {
                dense_.t0 = t_;
                dense_.h = h;
                for (std::size_t i = 0; i < D; ++i) {
                    const double ydiff = y1[i] - y_[i];
                    const double bspl = h * k1_[i] - ydiff;
                    dense_.r[0][i] = y_[i];
                    dense_.r[1][i] = ydiff;
                    dense_.r[2][i] = bspl;
                    dense_.r[3][i] = ydiff - h * k7[i] - bspl;
                    dense_.r[4][i] = h * (d1 * k1_[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                                          d6 * k6[i] + d7 * k7[i]);
                }
                t_ = last ? t_limit : t_ + h;
                y_ = y1;
                k1_ = k7;
                ++n_accepted_;
                const double fac = err == 0.0 ? 5.0 : std::clamp(opt_.safety * std::pow(err, -0.2), 0.2, 5.0);
                h_ = rejected_last_ ? std::min(h, h * fac) : h * fac;
                rejected_last_ = false;
                return Status::Ok;
            }
            ++n_rejected_;
            rejected_last_ = true;
            h_ = h * std::max(0.2, opt_.safety * std::pow(err, -0.2));
        }
    }

private:
    double initial_step() {
        double d0 = 0.0, d1n = 0.0;
        for (std::size_t i = 0; i < D; ++i) {
            const double sc = opt_.atol[i] + opt_.rtol * std::abs(y_[i]);
            if (sc <= 0.0) continue;
            d0 += (y_[i] / sc) * (y_[i] / sc);
            d1n += (k1_[i] / sc) * (k1_[i] / sc);
        }
        d0 = std::sqrt(d0 / D);
        d1n = std::sqrt(d1n / D);
        double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
        h0 = std::min(h0, opt_.h_max);
        Y y1;
        for (std::size_t i = 0; i < D; ++i) y1[i] = y_[i] + h0 * k1_[i];
        const Y f1 = f_(t_ + h0, y1);
        double d2 = 0.0;
        for (std::size_t i = 0; i < D; ++i) {
            const double sc = opt_.atol[i] + opt_.rtol * std::abs(y_[i]);
            if (sc <= 0.0) continue;
            const double v = (f1[i] - k1_[i]) / sc;
            d2 += v * v;
        }
        d2 = std::sqrt(d2 / D) / h0;
        const double dm = std::max(d1n, d2);
        const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
        const double h = std::min({100.0 * h0, h1, opt_.h_max});
        return std::isfinite(h) && h > 0.0 ? h : 1e-6;
    }

    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                            a75 = -2187.0 / 6784, a76 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
    static constexpr double d1 = -12715105075.0 / 11282082432.0,
                            d3 = 87487479700.0 / 32700410799.0,
                            d4 = -10690763975.0 / 1880347072.0,
                            d5 = 701980252875.0 / 199316789632.0,
                            d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

    F f_;
    Options<D> opt_;
    double t_;
    Y y_;
    Y k1_{};
    double h_ = 0.0;
    long n_accepted_ = 0;
    long n_rejected_ = 0;
    bool rejected_last_ = false;
    DenseStep<D> dense_{};
};

template <std::size_t D, class F>
Dopri5<D, F> make_dopri5(F rhs, double t0, const State<D>& y0, const Options<D>& opt) {
    return Dopri5<D, F>(std::move(rhs), t0, y0, opt);
}

/// Bisection for a sign change of g over [ta, tb] on a dense step.
/// ga is g at ta; returns the right end of the final bracket.
template <std::size_t D, class G>
double locate_root(const DenseStep<D>& dense, G&& g, double ta, double tb, double ga,
                   double tol = 1e-12) {
    while (tb - ta > tol * std::max(1.0, std::abs(tb))) {
        const double tm = 0.5 * (ta + tb);
        const double gm = g(tm, dense(tm));
        if ((gm > 0.0) == (ga > 0.0)) {
            ta = tm;
            ga = gm;
        } else {
            tb = tm;
        }
    }
    return tb;
}

}  // namespace fdx::ode
