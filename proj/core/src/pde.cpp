#include "fdx/pde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fdx/classifier.hpp"
#include "fdx/error.hpp"

namespace fdx {

namespace {

const Params& params_of(const PdeConfig& cfg) {
    if (!cfg.params) throw Error(ErrorCode::BadConfig, "PdeConfig has no parameters");
    return *cfg.params;
}

double sgn_pow(double w, double e) { return w >= 0.0 ? std::pow(w, e) : -std::pow(-w, e); }

// Thomas algorithm; a sub-, b main, c super-diagonal, d right-hand side (overwritten).
void solve_tridiagonal(std::vector<double>& a, std::vector<double>& b, std::vector<double>& c,
                       std::vector<double>& d) {
    const std::size_t n = b.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double m = a[i] / b[i - 1];
        b[i] -= m * c[i - 1];
        d[i] -= m * d[i - 1];
    }
    d[n - 1] /= b[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) d[i] = (d[i] - c[i] * d[i + 1]) / b[i];
}

double sup_norm(const std::vector<double>& u) {
    double s = 0.0;
    for (double v : u) s = std::max(s, std::abs(v));
    return s;
}

double mass_of(const RadialGrid& g, const std::vector<double>& u) {
    double m = 0.0;
    for (std::size_t i = 0; i + 1 < u.size(); ++i) m += g.vol[i] * u[i];
    return m;
}

}  // namespace

double stationary_solution(const Params& params, double r) {
    const Derived d = derive_constants(params);
    return d.C0 * std::pow(r, -d.q_tail);
}

void validate_config(const PdeConfig& cfg) {
    params_of(cfg);
    std::ostringstream os;
    if (!(cfg.R > 0.0) || !std::isfinite(cfg.R)) os << "R must be positive; ";
    if (cfg.n < (cfg.diffusion ? 16 : 1)) os << "n must be at least 16; ";
    if (cfg.r_inner < 0.0 || cfg.r_inner >= cfg.R) os << "r_inner must lie in [0, R); ";
    if (!(cfg.dt.dt0 > 0.0) || !(cfg.dt.target > 0.0)) os << "dt0 and target must be positive; ";
    if (const auto* c = std::get_if<IcConstant>(&cfg.ic); c && !(c->K > 0.0)) os << "Constant K must be positive; ";
    if (const auto* t = std::get_if<IcRadialTable>(&cfg.ic)) {
        if (t->r.size() != t->u.size() || t->r.empty()) os << "RadialTable needs matching non-empty r and u; ";
        if (!std::is_sorted(t->r.begin(), t->r.end())) os << "RadialTable r must be sorted; ";
        for (double v : t->u)
            if (!(v >= 0.0)) {
                os << "RadialTable u must be nonnegative; ";
                break;
            }
    }
    if (const auto* pt = std::get_if<IcPowerTail>(&cfg.ic)) {
        if (!(cfg.r_inner > 0.0)) os << "PowerTail IC is singular at r = 0 (use r_inner > 0); ";
        if (!(pt->amplitude >= 0.0)) os << "PowerTail amplitude must be nonnegative; ";
    }
    const std::string msg = os.str();
    if (!msg.empty()) throw Error(ErrorCode::BadConfig, msg.substr(0, msg.size() - 2));
}

RadialGrid make_grid(const PdeConfig& cfg) {
    validate_config(cfg);
    const Params& P = params_of(cfg);
    const int n = cfg.n, N = P.N();
    RadialGrid g;
    g.h = (cfg.R - cfg.r_inner) / n;
    g.first = cfg.r_inner > 0.0 ? 1 : 0;
    g.r.resize(n + 1);
    g.vol.assign(n + 1, 0.0);
    g.face_coef.resize(n);
    g.weight.resize(n + 1);
    for (int i = 0; i <= n; ++i) {
        g.r[i] = cfg.r_inner + i * g.h;
        g.weight[i] = cfg.absorption ? std::pow(g.r[i], P.sigma()) : 0.0;
    }
    for (int i = 0; i < n; ++i) {
        const double rf = g.r[i] + 0.5 * g.h;
        g.face_coef[i] = std::pow(rf, N - 1) / g.h;
    }
    for (int i = 0; i <= n; ++i) {
        const double lo = std::max(cfg.r_inner, g.r[i] - 0.5 * g.h);
        const double hi = std::min(cfg.R, g.r[i] + 0.5 * g.h);
        g.vol[i] = (std::pow(hi, N) - std::pow(lo, N)) / N;
    }
    return g;
}

PdeState initial_state(const PdeConfig& cfg, const RadialGrid& g) {
    const Params& P = params_of(cfg);
    PdeState s;
    s.u.resize(g.r.size());
    for (std::size_t i = 0; i < g.r.size(); ++i) {
        const double r = g.r[i];
        s.u[i] = std::visit(
            [r](const auto& ic) -> double {
                using T = std::decay_t<decltype(ic)>;
                if constexpr (std::is_same_v<T, IcConstant>) {
                    return ic.K;
                } else if constexpr (std::is_same_v<T, IcPowerTail>) {
                    return ic.amplitude * std::pow(r, -ic.exponent);
                } else {
                    if (r <= ic.r.front()) return ic.u.front();
                    if (r >= ic.r.back()) return ic.u.back();
                    const auto it = std::upper_bound(ic.r.begin(), ic.r.end(), r);
                    const std::size_t k = static_cast<std::size_t>(it - ic.r.begin());
                    const double t = (r - ic.r[k - 1]) / (ic.r[k] - ic.r[k - 1]);
                    return ic.u[k - 1] + t * (ic.u[k] - ic.u[k - 1]);
                }
            },
            cfg.ic);
    }
    const int n = cfg.n;
    s.u[n] = cfg.bc_outer == OuterBc::ExactStationary ? stationary_solution(P, cfg.R) : 0.0;
    if (g.first == 1) s.u[0] = stationary_solution(P, cfg.r_inner);
    return s;
}

PdeState step(const PdeConfig& cfg, const RadialGrid& g, const PdeState& s, double dt,
              StepStats* stats) {
    if (!(dt > 0.0)) throw Error(ErrorCode::BadRange, "dt must be positive");
    const Params& P = params_of(cfg);
    const double m = P.m(), pm = P.p() / m, im = 1.0 / m;
    const int n = cfg.n, i0 = g.first;
    const int nu = n - i0;  // unknowns i0..n−1
    const double kd = cfg.diffusion ? 1.0 : 0.0;

    std::vector<double> w(n + 1);
    for (int i = 0; i <= n; ++i) w[i] = sgn_pow(s.u[i], m);

    // pointwise guess: u + dt·r^σ u^p = u_old
    for (int i = i0; i < n; ++i) {
        const double uo = std::max(s.u[i], 0.0);
        if (uo == 0.0 || g.weight[i] == 0.0) continue;
        const double c = dt * g.weight[i];
        double u = uo;
        for (int k = 0; k < 60; ++k) {
            const double F = u + c * std::pow(u, P.p()) - uo;
            const double dF = 1.0 + c * P.p() * std::pow(u, P.p() - 1.0);
            double un = u - F / dF;
            if (un <= 0.0) un = 0.5 * u;
            if (std::abs(un - u) <= 1e-14 * u) {
                u = un;
                break;
            }
            u = un;
        }
        w[i] = std::pow(u, m);
    }

    std::vector<double> G(nu), a(nu), b(nu), c(nu), d(nu);
    auto residual = [&](const std::vector<double>& wv, std::vector<double>& out) {
        double norm = 0.0;
        for (int i = i0; i < n; ++i) {
            const int k = i - i0;
            double flux = 0.0;
            flux += g.face_coef[i] * (wv[i + 1] - wv[i]);
            if (i > 0) flux -= g.face_coef[i - 1] * (wv[i] - wv[i - 1]);
            const double scale = g.vol[i] / dt;
            out[k] = scale * (sgn_pow(wv[i], im) - s.u[i]) - kd * flux +
                     g.vol[i] * g.weight[i] * sgn_pow(wv[i], pm);
            norm = std::max(norm, std::abs(out[k]) / scale);
        }
        return norm;
    };

    double rnorm = residual(w, G);
    int it = 0;
    for (;; ++it) {
        if (it >= cfg.newton_max) {
            std::ostringstream os;
            os << "Newton did not converge in " << cfg.newton_max << " iterations (dt = " << dt
               << ", t = " << s.t << ", residual = " << rnorm << ")";
            throw Error(ErrorCode::NewtonDivergence, os.str());
        }
        for (int i = i0; i < n; ++i) {
            const int k = i - i0;
            const double aw = std::abs(w[i]);
            const double scale = g.vol[i] / dt;
            double diag = scale * im * std::pow(aw, im - 1.0) +
                          g.vol[i] * g.weight[i] * pm * std::pow(aw, pm - 1.0);
            diag += kd * g.face_coef[i];
            if (i > 0) diag += kd * g.face_coef[i - 1];
            b[k] = diag;
            a[k] = (k > 0) ? -kd * g.face_coef[i - 1] : 0.0;
            c[k] = (k + 1 < nu) ? -kd * g.face_coef[i] : 0.0;
            d[k] = -G[k];
        }
        solve_tridiagonal(a, b, c, d);

        double wmax = 0.0, dmax = 0.0;
        for (int i = i0; i < n; ++i) {
            wmax = std::max(wmax, std::abs(w[i]));
            dmax = std::max(dmax, std::abs(d[i - i0]));
        }
        if (!std::isfinite(dmax)) throw Error(ErrorCode::NewtonDivergence, "non-finite Newton update");

        // damped update
        double lambda = 1.0;
        std::vector<double> wt(w);
        std::vector<double> Gt(nu);
        double rt = 0.0;
        for (int tries = 0; tries < 12; ++tries) {
            for (int i = i0; i < n; ++i) wt[i] = w[i] + lambda * d[i - i0];
            rt = residual(wt, Gt);
            if (rt <= (1.0 - 1e-4 * lambda) * rnorm || rt == 0.0) break;
            lambda *= 0.5;
        }
        w.swap(wt);
        G.swap(Gt);
        rnorm = rt;
        if (lambda * dmax <= cfg.newton_tol * std::max(wmax, 1e-300) || rnorm == 0.0) {
            ++it;
            break;
        }
    }
    if (stats) stats->newton_iterations = it;

    PdeState out;
    out.t = s.t + dt;
    out.u = s.u;
    for (int i = i0; i < n; ++i) out.u[i] = std::max(sgn_pow(w[i], im), 0.0);
    return out;
}

namespace {

double aitken(const std::vector<double>& t) {
    const double d1 = t[1] - t[0], d2 = t[2] - t[1];
    const double den = d2 - d1;
    if (den == 0.0 || !std::isfinite(den)) return t[2];
    const double T = t[2] - d2 * d2 / den;
    return T >= t[2] ? T : t[2];
}

ExtinctionReport run_core(const PdeConfig& cfg, double tol_u, const RunOptions& opt) {
    const RadialGrid g = make_grid(cfg);
    PdeState s = initial_state(cfg, g);
    ExtinctionReport rep;
    rep.n = cfg.n;
    double sup = sup_norm(s.u);
    rep.trace.push_back({s.t, sup, mass_of(g, s.u)});
    if (opt.observer) opt.observer(s);

    const std::vector<double> levels = {100.0 * tol_u, 10.0 * tol_u, tol_u};
    std::size_t next_level = 0;
    while (next_level < levels.size() && sup < levels[next_level]) {
        rep.crossing_times.push_back(0.0);
        ++next_level;
    }
    std::vector<double> snaps = opt.snapshot_times;
    std::sort(snaps.begin(), snaps.end());
    std::size_t next_snap = 0;
    while (next_snap < snaps.size() && snaps[next_snap] <= 0.0) {
        if (opt.on_snapshot) opt.on_snapshot(0.0, g.r, s.u);
        ++next_snap;
    }

    double dt = cfg.dt.dt0;
    const double eps_mono = 1e-12;
    while (next_level < levels.size()) {
        if (rep.steps >= opt.max_steps || s.t >= opt.t_max) {
            rep.stop_reason = "budget exhausted";
            break;
        }
        if (next_snap < snaps.size()) dt = std::min(dt, snaps[next_snap] - s.t);
        dt = std::min(dt, cfg.dt.dt_max);
        if (dt < cfg.dt.dt_min) {
            rep.stop_reason = "MinDtUnderflow";
            break;
        }
        // step doubling: one step of dt against two of dt/2
        PdeState full, nxt;
        try {
            full = step(cfg, g, s, dt);
            nxt = step(cfg, g, step(cfg, g, s, 0.5 * dt), 0.5 * dt);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NewtonDivergence) throw;
            ++rep.newton_failures;
            dt *= 0.5;
            continue;
        }
        nxt.t = s.t + dt;
        double err = 0.0;
        for (std::size_t i = 0; i < s.u.size(); ++i) err = std::max(err, std::abs(nxt.u[i] - full.u[i]));
        const double rel = err / std::max(sup, 1e-300);
        if (rel > cfg.dt.reject * cfg.dt.target) {
            ++rep.rejected;
            dt *= std::clamp(0.9 * std::sqrt(cfg.dt.target / rel), 0.1, 0.5);
            continue;
        }

        const double sup_new = sup_norm(nxt.u);
        if (sup_new > sup * (1.0 + eps_mono)) rep.sup_monotone = false;
        for (std::size_t i = 0; i + 1 < nxt.u.size(); ++i) {
            if (nxt.u[i] < 0.0) rep.nonnegative = false;
            if (static_cast<int>(i) >= g.first && nxt.u[i + 1] > nxt.u[i] + eps_mono * sup_new)
                rep.radial_monotone = false;
        }
        ++rep.steps;
        const double t_old = s.t;
        s = std::move(nxt);
        rep.trace.push_back({s.t, sup_new, mass_of(g, s.u)});
        if (opt.observer) opt.observer(s);
        while (next_snap < snaps.size() && s.t >= snaps[next_snap] * (1.0 - 1e-12)) {
            if (opt.on_snapshot) opt.on_snapshot(s.t, g.r, s.u);
            ++next_snap;
        }
        while (next_level < levels.size() && sup_new < levels[next_level]) {
            // log-linear interpolation of the crossing inside the step
            const double a = std::log(sup), b = std::log(std::max(sup_new, 1e-300));
            const double th = (std::log(levels[next_level]) - a) / (b - a);
            rep.crossing_times.push_back(t_old + th * (s.t - t_old));
            ++next_level;
        }
        sup = sup_new;
        const double grow = rel > 0.0 ? 0.9 * std::sqrt(cfg.dt.target / rel) : 2.0;
        dt *= std::clamp(grow, 0.5, 2.0);
    }
    rep.T_last = s.t;
    rep.extinguished = next_level == levels.size();
    if (rep.extinguished) {
        rep.stop_reason = "sup below tol_u";
        rep.T_est = aitken(rep.crossing_times);
    } else {
        rep.T_est = std::numeric_limits<double>::quiet_NaN();
    }
    return rep;
}

}  // namespace

RateFit fit_extinction_rate(const ExtinctionReport& rep, double window_frac, double alpha_theory) {
    if (!(window_frac > 0.0 && window_frac <= 1.0)) throw Error(ErrorCode::BadRange, "window_frac must lie in (0, 1]");
    if (!std::isfinite(rep.T_est) || rep.trace.size() < 3)
        throw Error(ErrorCode::WindowTooShort, "no finite extinction time or trace too short");
    double s_max = 0.0, s_min = std::numeric_limits<double>::infinity();
    for (const auto& p : rep.trace)
        if (p.sup > 0.0 && p.t < rep.T_est) {
            s_max = std::max(s_max, p.sup);
            s_min = std::min(s_min, p.sup);
        }
    const double l_cut = std::log(s_min) + window_frac * (std::log(s_max) - std::log(s_min));
    std::vector<double> X, Y, T;
    for (const auto& p : rep.trace) {
        if (!(p.sup > 0.0) || p.t >= rep.T_est) continue;
        if (std::log(p.sup) > l_cut) continue;
        X.push_back(std::log(rep.T_est - p.t));
        Y.push_back(std::log(p.sup));
        T.push_back(p.t);
    }
    if (X.size() < 3) throw Error(ErrorCode::WindowTooShort, "fewer than three points in the fit window");
    const auto [xmin, xmax] = std::minmax_element(X.begin(), X.end());
    const double decades = (*xmax - *xmin) / std::log(10.0);
    if (decades < 1.0) {
        std::ostringstream os;
        os << "fit window spans " << decades << " decades of T - t";
        throw Error(ErrorCode::WindowTooShort, os.str());
    }
    const double n = static_cast<double>(X.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < X.size(); ++i) {
        sx += X[i];
        sy += Y[i];
        sxx += X[i] * X[i];
        sxy += X[i] * Y[i];
    }
    const double den = n * sxx - sx * sx;
    const double slope = (n * sxy - sx * sy) / den;
    const double icpt = (sy - slope * sx) / n;
    double ss = 0.0;
    for (std::size_t i = 0; i < X.size(); ++i) {
        const double r = Y[i] - (icpt + slope * X[i]);
        ss += r * r;
    }
    const double sigma2 = X.size() > 2 ? ss / (n - 2.0) : 0.0;
    const double se = std::sqrt(sigma2 * n / den);
    RateFit f;
    f.alpha_est = slope;
    f.alpha_lo = slope - 2.0 * se;
    f.alpha_hi = slope + 2.0 * se;
    f.t_from = *std::min_element(T.begin(), T.end());
    f.t_to = *std::max_element(T.begin(), T.end());
    f.decades = decades;
    f.residual = std::sqrt(ss / n);
    f.n = static_cast<int>(X.size());
    const double a = alpha_theory > 0.0 ? alpha_theory : slope;
    f.C1_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < X.size(); ++i) f.C1_min = std::min(f.C1_min, std::exp(Y[i] - a * X[i]));
    return f;
}

ExtinctionReport run_until_extinction(const PdeConfig& cfg, double tol_u, const RunOptions& opt) {
    if (!(tol_u > 0.0)) throw Error(ErrorCode::BadRange, "tol_u must be positive");
    const Params& P = params_of(cfg);
    const double alpha = derive_constants(P).alpha;
    ExtinctionReport rep = run_core(cfg, tol_u, opt);
    if (rep.extinguished) {
        try {
            rep.fit = fit_extinction_rate(rep, opt.window_frac, alpha);
        } catch (const Error&) {
        }
    }
    if (opt.refine && cfg.n >= 32) {
        PdeConfig coarse = cfg;
        coarse.n = cfg.n / 2;
        RunOptions o2;
        o2.t_max = opt.t_max;
        o2.max_steps = opt.max_steps;
        o2.refine = false;
        const ExtinctionReport rc = run_core(coarse, tol_u, o2);
        rep.n_coarse = coarse.n;
        if (rc.extinguished) {
            rep.T_coarse = rc.T_est;
            try {
                rep.alpha_coarse = fit_extinction_rate(rc, opt.window_frac, alpha).alpha_est;
            } catch (const Error&) {
            }
        }
    }
    return rep;
}

RadiusChoice choose_outer_radius(const PdeConfig& cfg, double tol_u, double rel, int max_doublings) {
    RadiusChoice out;
    PdeConfig c = cfg;
    RunOptions o;
    o.refine = false;
    for (int k = 0; k <= max_doublings; ++k) {
        const ExtinctionReport r = run_until_extinction(c, tol_u, o);
        out.radii.push_back(c.R);
        out.T_est.push_back(r.T_est);
        out.R = c.R;
        const std::size_t m = out.T_est.size();
        if (m >= 2 && std::isfinite(out.T_est[m - 1]) && std::isfinite(out.T_est[m - 2]) &&
            std::abs(out.T_est[m - 1] - out.T_est[m - 2]) < rel * std::abs(out.T_est[m - 1])) {
            out.R = out.radii[m - 2];
            out.converged = true;
            break;
        }
        c.R *= 2.0;
        c.n *= 2;
    }
    return out;
}

AuditReport supersolution_audit(const PdeConfig& cfg, double A, double T, double tol_u_rel,
                                SupersolutionSetup* setup) {
    const Params& P = params_of(cfg);
    const Derived d = derive_constants(P);
    AuditReport rep;
    rep.name = "supersolution";
    rep.worst_margin = std::numeric_limits<double>::infinity();

    const auto cls = classify(P, A);
    if (cls.cls != ShootingClass::SetA_MinGrowth) {
        std::ostringstream os;
        os << "A = " << A << " classifies " << to_string(cls.cls) << ", need SetA_MinGrowth";
        throw Error(ErrorCode::PreconditionViolated, os.str());
    }
    const RadialGrid g = make_grid(cfg);
    const PdeState s0 = initial_state(cfg, g);
    const double u0max = sup_norm(s0.u);

    // profile up to its minimum first, to size T
    ProfileOptions po;
    po.after_min = AfterMinimum::StopAtA;
    const double xs = profile_scale(P, A);
    const ProfileSolution pmin = integrate_profile(P, A, 1e8 * xs, po);
    if (!pmin.minimum) throw Error(ErrorCode::PreconditionViolated, "profile has no positive minimum");
    const double f_min = pmin.minimum->f_min;
    if (!(T > 0.0)) T = 1.05 * std::pow(u0max / f_min, 1.0 / d.alpha);
    if (!(std::pow(T, d.alpha) * f_min > u0max)) {
        std::ostringstream os;
        os << "T^alpha f(xi0(A);A) = " << std::pow(T, d.alpha) * f_min << " does not exceed ||u0|| = " << u0max;
        throw Error(ErrorCode::PreconditionViolated, os.str());
    }
    if (setup) *setup = {A, T, f_min, pmin.minimum->xi_min};

    po.after_min = AfterMinimum::ContinueGrowth;
    const double xi_need = cfg.R * std::pow(T, d.beta);
    const ProfileSolution prof = integrate_profile(P, A, std::max(1.01 * xi_need, 2.0 * pmin.xi_end()), po);
    const bool blew_up = std::holds_alternative<SuspectedBlowUp>(prof.terminal);
    if (!blew_up && prof.xi_end() < xi_need) {
        std::ostringstream os;
        os << "profile integrated to xi = " << prof.xi_end() << " (" << terminal_name(prof.terminal)
           << "), need " << xi_need;
        throw Error(ErrorCode::ProfileRangeExceeded, os.str());
    }
    const double f_end = prof.samples.back().f;
    const double cap = 2.0 * A * std::pow(T, d.alpha);

    long checked = 0, viol = 0;
    auto check_state = [&](const PdeState& s) {
        if (s.t >= T) {
            // beyond T the barrier is void; u must already be extinct
            const double su = sup_norm(s.u);
            ++checked;
            if (su > 0.0) {
                ++viol;
                rep.violations.push_back({"u positive at t >= T", s.t, {0.0, su, 0.0}, -su});
            }
            return;
        }
        const double tau = T - s.t;
        const double ta = std::pow(tau, d.alpha), tb = std::pow(tau, d.beta);
        for (std::size_t i = 0; i < s.u.size(); ++i) {
            const double xi = g.r[i] * tb;
            double U;
            if (xi <= prof.xi_begin()) U = ta * A;
            else if (xi <= prof.xi_end()) U = ta * prof.at(xi).f;
            else U = ta * f_end;  // f keeps growing past the integrated range
            const double bar = std::min(U, cap);
            const double margin = bar - s.u[i];
            ++checked;
            rep.worst_margin = std::min(rep.worst_margin, margin / std::max(bar, 1e-300));
            if (margin < 0.0) {
                ++viol;
                if (rep.violations.size() < kMaxRecordedViolations)
                    rep.violations.push_back({"u above barrier", s.t, {g.r[i], s.u[i], bar}, margin});
            }
        }
    };

    RunOptions ro;
    ro.refine = false;
    ro.observer = check_state;
    const ExtinctionReport run = run_core(cfg, tol_u_rel * u0max, ro);
    rep.n_samples = checked;
    rep.n_violations = viol;
    rep.details["A"] = A;
    rep.details["T"] = T;
    rep.details["f_min"] = f_min;
    rep.details["xi_min"] = pmin.minimum->xi_min;
    rep.details["u0_sup"] = u0max;
    rep.details["T_alpha_fmin"] = std::pow(T, d.alpha) * f_min;
    rep.details["profile_terminal"] = terminal_name(prof.terminal);
    rep.details["profile_xi_end"] = prof.xi_end();
    rep.details["xi_needed"] = xi_need;
    rep.details["T_est_run"] = run.T_est;
    return rep;
}

int count_intersections(const PdeConfig& cfg, const RadialGrid& g, const PdeState& s,
                        const ProfileSolution& profile, double T) {
    const Derived d = derive_constants(params_of(cfg));
    if (!(s.t < T)) return 0;
    const double tau = T - s.t;
    const double ta = std::pow(tau, d.alpha), tb = std::pow(tau, d.beta);
    int count = 0, prev = 0;
    for (std::size_t i = 0; i + 1 < s.u.size(); ++i) {
        const double xi = g.r[i] * tb;
        if (xi > profile.xi_end()) break;
        const double U = xi <= profile.xi_begin() ? ta * profile.A : ta * profile.at(xi).f;
        const double diff = s.u[i] - U;
        const int sg = diff > 0.0 ? 1 : (diff < 0.0 ? -1 : 0);
        if (sg != 0) {
            if (prev != 0 && sg != prev) ++count;
            prev = sg;
        }
    }
    return count;
}

double stationary_drift_rate(const PdeConfig& cfg, double t_end) {
    const RadialGrid g = make_grid(cfg);
    const PdeState s0 = initial_state(cfg, g);
    PdeState s = s0;
    const int steps = 20;
    const double dt = t_end / steps;
    for (int k = 0; k < steps; ++k) s = step(cfg, g, s, dt);
    double drift = 0.0;
    for (std::size_t i = 0; i < s.u.size(); ++i) drift = std::max(drift, std::abs(s.u[i] - s0.u[i]));
    return drift / t_end;
}

nlohmann::ordered_json to_json(const RateFit& f) {
    return {{"alpha_est", f.alpha_est}, {"alpha_lo", f.alpha_lo}, {"alpha_hi", f.alpha_hi},
            {"t_from", f.t_from},       {"t_to", f.t_to},         {"decades", f.decades},
            {"residual", f.residual},   {"C1_min", f.C1_min},     {"n", f.n}};
}

nlohmann::ordered_json to_json(const ExtinctionReport& r) {
    nlohmann::ordered_json j{
        {"T_est", r.T_est},
        {"T_last", r.T_last},
        {"crossing_times", r.crossing_times},
        {"extinguished", r.extinguished},
        {"stop_reason", r.stop_reason},
        {"n", r.n},
        {"steps", r.steps},
        {"rejected_steps", r.rejected},
        {"newton_failures", r.newton_failures},
        {"sup_monotone", r.sup_monotone},
        {"radial_monotone", r.radial_monotone},
        {"nonnegative", r.nonnegative},
    };
    j["fit"] = r.fit ? to_json(*r.fit) : nlohmann::ordered_json(nullptr);
    nlohmann::ordered_json ref{{"n_coarse", r.n_coarse}};
    ref["T_coarse"] = r.T_coarse ? nlohmann::ordered_json(*r.T_coarse) : nlohmann::ordered_json(nullptr);
    ref["alpha_coarse"] = r.alpha_coarse ? nlohmann::ordered_json(*r.alpha_coarse) : nlohmann::ordered_json(nullptr);
    if (r.T_coarse && std::isfinite(r.T_est))
        ref["T_relative_change"] = std::abs(r.T_est - *r.T_coarse) / r.T_est;
    j["refinement"] = ref;
    return j;
}

}  // namespace fdx
