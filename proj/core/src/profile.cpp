#include "fdx/profile.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fdx/error.hpp"

namespace fdx {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

struct LineFit {
    double slope, intercept, rms;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double den = n * sxx - sx * sx;
    const double slope = (n * sxy - sx * sy) / den;
    const double intercept = (sy - slope * sx) / n;
    double ss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (intercept + slope * x[i]);
        ss += r * r;
    }
    return {slope, intercept, std::sqrt(ss / n)};
}

}  // namespace

std::string_view terminal_name(const TerminalEvent& t) noexcept {
    return std::visit(overloaded{
                          [](const HitZero&) { return std::string_view("HitZero"); },
                          [](const MinThenGrowth&) { return std::string_view("MinThenGrowth"); },
                          [](const ReachedXiMax&) { return std::string_view("ReachedXiMax"); },
                          [](const SuspectedBlowUp&) { return std::string_view("SuspectedBlowUp"); },
                          [](const StiffnessFailure&) { return std::string_view("StiffnessFailure"); },
                      },
                      t);
}

double profile_scale(const Params& params, double A) {
    const Derived d = derive_constants(params);
    return std::sqrt(params.m() / d.alpha) * std::pow(A, -0.5 * (1.0 - params.m()));
}

ProfileSample series_start(const Params& params, double A, double xi_init) {
    const Derived d = derive_constants(params);
    const double m = params.m();
    const double c = d.alpha * std::pow(A, 2.0 - m) / (m * params.N());
    return {xi_init, A - 0.5 * c * xi_init * xi_init, -c * xi_init};
}

double profile_second_derivative(const Params& params, double xi, double f, double g) {
    const Derived d = derive_constants(params);
    const double m = params.m(), p = params.p(), s = params.sigma();
    const int N = params.N();
    const double src = -d.alpha * f - d.beta * xi * g + std::pow(xi, s) * std::pow(f, p);
    return -(m - 1.0) * g * g / f - (N - 1) * g / xi + std::pow(f, 1.0 - m) * src / m;
}

double profile_residual(const Params& params, double xi, double f, double fp, double fpp) {
    const Derived d = derive_constants(params);
    const double m = params.m(), p = params.p(), s = params.sigma();
    const int N = params.N();
    const double fm1 = std::pow(f, m - 1.0);
    const double wp = m * fm1 * fp;
    const double wpp = m * fm1 * fpp + m * (m - 1.0) * fm1 / f * fp * fp;
    return wpp + (N - 1) * wp / xi + d.alpha * f + d.beta * xi * fp - std::pow(xi, s) * std::pow(f, p);
}

ProfileSample ProfileSolution::at(double xi) const {
    if (dense.empty()) return samples.front();
    auto it = std::upper_bound(dense.begin(), dense.end(), xi,
                               [](double v, const ode::DenseStep<2>& s) { return v < s.t0; });
    if (it != dense.begin()) --it;
    const auto s = (*it)(xi);
    return {xi, s[0], s[1]};
}

ProfileSolution integrate_profile(const Params& params, double A, double xi_max,
                                  const ProfileOptions& o) {
    if (!(A > 0.0) || !std::isfinite(A)) throw Error(ErrorCode::BadRange, "A must be positive");
    const double xs = profile_scale(params, A);
    const double xi_init = o.xi_init > 0.0 ? o.xi_init : 1e-3 * xs;
    if (!(xi_max > xi_init)) {
        std::ostringstream os;
        os << "xi_max (" << xi_max << ") must exceed xi_init (" << xi_init << ")";
        throw Error(ErrorCode::BadRange, os.str());
    }
    const Derived d = derive_constants(params);
    const double m = params.m(), p = params.p(), s = params.sigma();
    const int N = params.N();

    ProfileSolution sol;
    sol.A = A;
    const ProfileSample s0 = series_start(params, A, xi_init);
    sol.samples.push_back(s0);

    auto rhs = [&](double xi, const ode::State<2>& y) -> ode::State<2> {
        const double f = y[0], g = y[1];
        if (!(f > 0.0)) return {g, std::numeric_limits<double>::quiet_NaN()};
        const double src = -d.alpha * f - d.beta * xi * g + std::pow(xi, s) * std::pow(f, p);
        return {g, -(m - 1.0) * g * g / f - (N - 1) * g / xi + std::pow(f, 1.0 - m) * src / m};
    };
    ode::Options<2> opt;
    opt.rtol = o.rtol;
    opt.atol = {o.atol * A, o.atol * A / xs};
    opt.max_steps = o.max_steps;
    opt.h_min = 1e-15;
    auto solver = ode::make_dopri5<2>(rhs, xi_init, ode::State<2>{s0.f, s0.fprime}, opt);

    const double f_floor = o.f_floor_rel * A;
    const double f_ceil = o.f_ceil_rel * A;
    double g_prev = s0.fprime;
    double f_prev = s0.f;

    for (;;) {
        if (solver.t() >= xi_max) {
            if (sol.minimum) sol.terminal = *sol.minimum;
            else sol.terminal = ReachedXiMax{};
            break;
        }
        const auto st = solver.step(xi_max);
        if (st != ode::Status::Ok) {
            const auto& last = sol.samples.back();
            if (sol.minimum && last.f > 1e3 * A && last.fprime > 0.0)
                sol.terminal = SuspectedBlowUp{last.xi + 2.0 * last.f / last.fprime};
            else
                sol.terminal = StiffnessFailure{last.xi};
            break;
        }
        const auto& dn = solver.dense();
        sol.dense.push_back(dn);
        const auto y1 = solver.y();
        const double xi1 = solver.t();

        if (y1[0] < f_floor) {
            const double xe = ode::locate_root<2>(
                dn, [f_floor](double, const ode::State<2>& v) { return v[0] - f_floor; }, dn.t0,
                dn.t1(), f_prev - f_floor, 1e-14);
            const auto ve = dn(xe);
            const double f = ve[0], g = ve[1];
            const double w = std::pow(f, m);
            const double w1 = m * std::pow(f, m - 1.0) * g;
            const double w2 = -(N - 1) * w1 / xe - d.alpha * f - d.beta * xe * g +
                              std::pow(xe, s) * std::pow(f, p);
            double delta = -w / w1;
            const double disc = 1.0 - 2.0 * w * w2 / (w1 * w1);
            if (disc >= 0.0) delta = -2.0 * w / (w1 * (1.0 + std::sqrt(disc)));
            sol.samples.push_back({xe, f, g});
            sol.terminal = HitZero{xe + delta, w1 + w2 * delta};
            break;
        }

        if ((g_prev < 0.0) != (y1[1] < 0.0)) {
            ++sol.fprime_sign_changes;
            if (!sol.minimum && g_prev < 0.0) {
                const double xm = ode::locate_root<2>(
                    dn, [](double, const ode::State<2>& v) { return v[1]; }, dn.t0, dn.t1(), g_prev,
                    1e-14);
                sol.minimum = MinThenGrowth{xm, dn(xm)[0]};
            }
        }

        if (sol.minimum && o.after_min == AfterMinimum::StopAtA && y1[0] >= A) {
            const double xa = ode::locate_root<2>(
                dn, [A](double, const ode::State<2>& v) { return v[0] - A; }, dn.t0, dn.t1(),
                f_prev - A, 1e-14);
            const auto va = dn(xa);
            sol.samples.push_back({xa, va[0], va[1]});
            sol.terminal = *sol.minimum;
            break;
        }

        sol.samples.push_back({xi1, y1[0], y1[1]});
        g_prev = y1[1];
        f_prev = y1[0];

        if (y1[0] > f_ceil) {
            sol.terminal = SuspectedBlowUp{xi1 + 2.0 * y1[0] / y1[1]};
            if (sol.samples.size() >= 8) {
                try {
                    sol.terminal = SuspectedBlowUp{blowup_exponent_fit(params, sol).xi1};
                } catch (const Error&) {
                }
            }
            break;
        }
    }
    return sol;
}

TailFit tail_power_fit(const ProfileSolution& sol, double xi_lo, double xi_hi,
                       double residual_threshold, int n) {
    const double lo = std::max(xi_lo, sol.xi_begin());
    const double hi = std::min(xi_hi, sol.xi_end());
    if (!(hi >= 10.0 * lo * (1.0 - 1e-12))) {
        std::ostringstream os;
        os << "usable window [" << lo << ", " << hi << "] spans less than one decade";
        throw Error(ErrorCode::WindowTooShort, os.str());
    }
    std::vector<double> lx, lf;
    lx.reserve(n);
    lf.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double t = std::log(lo) + (std::log(hi) - std::log(lo)) * i / (n - 1);
        const double xi = std::exp(t);
        const double f = sol.at(std::clamp(xi, sol.xi_begin(), sol.xi_end())).f;
        if (!(f > 0.0)) continue;
        lx.push_back(t);
        lf.push_back(std::log(f));
    }
    if (lx.size() < 3) throw Error(ErrorCode::WindowTooShort, "too few positive samples in window");
    const LineFit fit = least_squares(lx, lf);
    TailFit out{};
    out.q_est = -fit.slope;
    out.residual = fit.rms;
    out.xi_lo = lo;
    out.xi_hi = hi;
    out.n = static_cast<int>(lx.size());
    out.accepted = fit.rms <= residual_threshold && out.q_est > 0.0;
    return out;
}

VanishSlope vanish_slope_check(const Params& params, const ProfileSolution& sol) {
    const auto* hz = std::get_if<HitZero>(&sol.terminal);
    if (!hz) throw Error(ErrorCode::WrongTerminal, "vanish_slope_check needs a HitZero terminal");
    const Derived d = derive_constants(params);
    const double m = params.m();
    VanishSlope out{};
    out.xi0 = hz->xi0;
    out.slope_fm = hz->slope_fm;
    out.slope_predicted =
        -m * std::pow(d.alpha / m, m / (m - 1.0)) * std::pow(hz->xi0, (m + 1.0) / (m - 1.0));
    out.rel_error = std::abs(out.slope_fm - out.slope_predicted) / std::abs(out.slope_predicted);

    // log-log fit of f against ξ0 − ξ where f < 1e-3·A
    const double f_hi = 1e-3 * sol.A;
    std::size_t k = sol.samples.size();
    while (k > 0 && sol.samples[k - 1].f < f_hi) --k;
    const double xa = k > 0 ? sol.samples[k - 1].xi : sol.xi_begin();
    double xa_cross = xa;
    if (k > 0 && k < sol.samples.size()) {
        double a = sol.samples[k - 1].xi, b = sol.samples[k].xi;
        for (int it = 0; it < 100 && b - a > 1e-15 * b; ++it) {
            const double mid = 0.5 * (a + b);
            if (sol.at(mid).f > f_hi) a = mid;
            else b = mid;
        }
        xa_cross = b;
    }
    const double xb = sol.xi_end();
    const double da = hz->xi0 - xa_cross, db = hz->xi0 - xb;
    std::vector<double> lx, lf;
    if (da > 0.0 && db > 0.0 && da > db) {
        const int n = 60;
        for (int i = 0; i < n; ++i) {
            const double delta = std::exp(std::log(da) + (std::log(db) - std::log(da)) * i / (n - 1));
            const double f = sol.at(std::clamp(hz->xi0 - delta, sol.xi_begin(), xb)).f;
            if (f > 0.0) {
                lx.push_back(std::log(delta));
                lf.push_back(std::log(f));
            }
        }
    }
    if (lx.size() >= 3) {
        const LineFit fit = least_squares(lx, lf);
        out.local_exponent = fit.slope;
        out.local_prefactor = std::exp(fit.intercept);
    } else {
        out.local_exponent = std::numeric_limits<double>::quiet_NaN();
        out.local_prefactor = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

BlowUpFit blowup_exponent_fit(const Params& params, const ProfileSolution& sol) {
    const double m = params.m(), p = params.p();
    std::vector<double> xs, ys;
    const double f_end = sol.samples.back().f;
    const double f_cut = std::sqrt(std::max(f_end, sol.A) * sol.A);
    for (const auto& s : sol.samples) {
        if (s.f > f_cut && s.fprime > 0.0) {
            xs.push_back(s.xi);
            ys.push_back(s.f / s.fprime);
        }
    }
    if (xs.size() < 4) throw Error(ErrorCode::WrongTerminal, "not enough growth samples for a blow-up fit");
    const LineFit fit = least_squares(xs, ys);
    BlowUpFit out{};
    out.q_blow = -1.0 / fit.slope;
    out.xi1 = -fit.intercept / fit.slope;
    out.residual = fit.rms;
    out.candidate_large = 2.0 / (p - m);
    out.candidate_small = 1.0 / (p - 1.0);
    out.n = static_cast<int>(xs.size());
    return out;
}

void to_json(nlohmann::ordered_json& j, const TerminalEvent& t) {
    nlohmann::ordered_json o;
    o["kind"] = terminal_name(t);
    std::visit(overloaded{
                   [&](const HitZero& h) {
                       o["xi0"] = h.xi0;
                       o["slope_fm"] = h.slope_fm;
                   },
                   [&](const MinThenGrowth& g) {
                       o["xi_min"] = g.xi_min;
                       o["f_min"] = g.f_min;
                   },
                   [](const ReachedXiMax&) {},
                   [&](const SuspectedBlowUp& b) { o["xi1_est"] = b.xi1_est; },
                   [&](const StiffnessFailure& s) { o["xi"] = s.xi; },
               },
               t);
    j = o;
}

}  // namespace fdx
