// Acceptance gate: one PASS/FAIL line per criterion, sub-checks indented above it.
// Exits 1 if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "fdx/audit.hpp"
#include "fdx/classifier.hpp"
#include "fdx/error.hpp"
#include "fdx/model.hpp"
#include "fdx/pde.hpp"
#include "fdx/phase.hpp"
#include "fdx/profile.hpp"

using namespace fdx;

namespace {

struct Criterion {
    int id;
    std::string title;
    double time_limit;  // seconds
    std::vector<std::string> failures;
    std::vector<std::string> flags;

    void check(bool ok, const std::string& what) {
        std::printf("  - %s %s\n", ok ? "ok     " : "not met", what.c_str());
        if (!ok) failures.push_back(what);
    }
    void flag(bool ok, const std::string& what) {
        std::printf("  - %s %s\n", ok ? "ok     " : "flagged", what.c_str());
        if (!ok) flags.push_back(what);
    }
    void note(const std::string& what) const { std::printf("  . %s\n", what.c_str()); }
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

nlohmann::json golden(const std::string& name) {
    std::ifstream in(std::string(FDX_GOLDEN_DIR) + "/" + name);
    if (!in) throw std::runtime_error("cannot open golden file " + name);
    return nlohmann::json::parse(in);
}

int run(Criterion& c, const std::function<void(Criterion&)>& body) {
    std::printf("criterion %d: %s\n", c.id, c.title.c_str());
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.check(secs < c.time_limit, fmt("runtime %.2f s < %.0f s", secs, c.time_limit));
    const bool pass = c.failures.empty();
    std::printf("%s criterion %d: %s%s\n\n", pass ? "PASS" : "FAIL", c.id, c.title.c_str(),
                c.flags.empty() ? "" : "  [flagged]");
    std::fflush(stdout);
    return pass ? 0 : 1;
}

const Params P0 = validate_params(0.5, 2.0, 3, 4.5);
const Params P1 = validate_params(0.5, 2.0, 1, 12.0);

// shared between criteria 5 and 6
std::optional<BisectionResult> g_astar;

const BisectionResult& astar_p0() {
    if (!g_astar) {
        const auto [lo, hi] = seed_bracket(P0);
        g_astar = find_A_star(P0, lo, hi);
    }
    return *g_astar;
}

void c1(Criterion& c) {
    const Derived d = derive_constants(P0);
    c.check(rel(d.alpha, 26.0) < 1e-14, fmt("alpha = %.15g (26)", d.alpha));
    c.check(rel(d.beta, 6.0) < 1e-14, fmt("beta = %.15g (6)", d.beta));
    c.check(rel(d.sigma_star, 4.0) < 1e-14, fmt("sigma* = %.15g (4)", d.sigma_star));
    c.check(rel(d.Z0, 91.0 / 18.0) < 1e-14, fmt("Z0 = %.15g (91/18)", d.Z0));
    c.check(rel(d.q_tail, 13.0 / 3.0) < 1e-14, fmt("q_tail = %.15g (13/3)", d.q_tail));
    // (91/36)^{2/3}, evaluated independently in Python
    const double L_oracle = 1.855635166696502;
    c.check(rel(d.L, L_oracle) < 1e-14, fmt("L = %.16g ((91/36)^{2/3} = %.16g)", d.L, L_oracle));
    c.note(fmt("L differs from the rounded 1.85586 by %.2e", std::abs(d.L - 1.85586)));
    const double m = P0.m(), p = P0.p(), s = P0.sigma();
    const double b1 = d.alpha - 1.0, b2 = m * d.alpha + 2.0 * d.beta, b3 = p * d.alpha - s * d.beta;
    c.check(std::abs(b1 - b2) < 1e-12 && std::abs(b1 - b3) < 1e-12,
            fmt("alpha-1 = m alpha + 2 beta = p alpha - sigma beta: %.17g %.17g %.17g", b1, b2, b3));
}

Matrix3 printed_matrix(const Params& P, EquilibriumLabel l) {
    const double m = P.m(), p = P.p(), s = P.sigma(), N = P.N();
    const Derived d = derive_constants(P);
    switch (l) {
        case EquilibriumLabel::Q1:
            return {{{2, 0, 0}, {-1, -(N - 2), 1}, {0, 0, s + 2}}};
        case EquilibriumLabel::Q2:
            return {{{(m * N - N + 2) / m, 0, 0},
                     {(p - m) * (N - 2) / (m * (s + 2)) - 1, N - 2, 1},
                     {0, 0, (m * (N + s) - p * (N - 2)) / m}}};
        default:
            return {{{(1 - m) * (d.sigma_star - s) / (p - m), 0, 0},
                     {0, (m * (N + 2 * s + 2) - p * (N - 2)) / (p - m), 1},
                     {0, (p - m) * d.Z0, 0}}};
    }
}

void c2(Criterion& c) {
    for (auto l : {EquilibriumLabel::Q1, EquilibriumLabel::Q2, EquilibriumLabel::Q3}) {
        const std::string name(to_string(l));
        const PhasePoint q = equilibrium_location(P0, l);
        const Matrix3 num = numeric_jacobian(P0, q, 1e-5);
        const Matrix3 pr = printed_matrix(P0, l);
        double err = 0;
        Eigen::Matrix3d M;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                err = std::max(err, std::abs(num[i][j] - pr[i][j]));
                M(i, j) = num[i][j];
            }
        c.check(err < 1e-8, name + fmt(" numeric Jacobian vs printed matrix: max |diff| = %.2e", err));

        // closed-form spectrum against an independent eigen-solve of the numeric Jacobian
        const Equilibrium e = equilibrium_spectrum(P0, l);
        Eigen::EigenSolver<Eigen::Matrix3d> es(M);
        std::vector<std::complex<double>> ev(es.eigenvalues().data(), es.eigenvalues().data() + 3);
        std::vector<std::complex<double>> cf(e.eigenvalues.begin(), e.eigenvalues.end());
        auto key = [](const std::complex<double>& a, const std::complex<double>& b) {
            return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
        };
        std::sort(ev.begin(), ev.end(), key);
        std::sort(cf.begin(), cf.end(), key);
        double eerr = 0;
        for (int i = 0; i < 3; ++i) eerr = std::max(eerr, std::abs(ev[i] - cf[i]));
        c.check(eerr < 1e-8, name + fmt(" closed-form eigenvalues vs eigen-solve: max |diff| = %.2e", eerr));
        std::printf("  . %s eigenvalues: %.10g %.10g %.10g\n", name.c_str(), cf[0].real(), cf[1].real(),
                    cf[2].real());
    }
    const Derived d = derive_constants(P0);
    const Equilibrium q3 = equilibrium_spectrum(P0, EquilibriumLabel::Q3);
    const double prod = (q3.eigenvalues[1] * q3.eigenvalues[2]).real();
    c.check(std::abs(prod + (P0.p() - P0.m()) * d.Z0) < 1e-12,
            fmt("Q3: lambda2 lambda3 = %.15g, -(p-m)Z0 = %.15g", prod, -(P0.p() - P0.m()) * d.Z0));
    const double l1 = (1 - P0.m()) * (d.sigma_star - P0.sigma()) / (P0.p() - P0.m());
    c.check(std::abs(q3.eigenvalues[0].real() - l1) < 1e-14 && l1 < 0,
            fmt("Q3: lambda1 = %.15g = (1-m)(sigma*-sigma)/(p-m) < 0", q3.eigenvalues[0].real()));
}

void c3(Criterion& c) {
    const Derived d = derive_constants(P0);
    const double q = d.q_tail;
    double worst = 0;
    for (int i = 0; i <= 200; ++i) {
        const double xi = 0.5 * std::pow(10.0, i / 200.0);
        const double f = d.C0 * std::pow(xi, -q);
        const double fp = -q * f / xi;
        const double fpp = q * (q + 1) * f / (xi * xi);
        const double r = profile_residual(P0, xi, f, fp, fpp);
        // scale: largest single term of the equation
        const double scale = std::max({d.alpha * f, std::abs(d.beta * xi * fp), std::pow(xi, P0.sigma()) * std::pow(f, P0.p())});
        worst = std::max(worst, std::abs(r) / scale);
    }
    c.check(worst < 1e-10, fmt("stationary profile residual on [0.5, 5], relative to largest term: %.2e", worst));

    const PhaseState st = profile_to_phase(P0, 1.0, d.C0, -q * d.C0);
    EventSpec ev;
    ev.rtol = 1e-13;
    ev.stop_on_escape = false;
    const PhaseTrajectory tr = integrate_phase(P0, st, st.eta + 10.0, ev);
    double dev = 0;
    for (const auto& s : tr.samples) dev = std::max(dev, distance_to_q3_line(P0, s.q));
    c.check(tr.eta_end() >= st.eta + 10.0 - 1e-12, fmt("phase image integrated over eta-span %.3g", tr.eta_end() - st.eta));
    c.check(dev < 1e-8, fmt("max (y,z) distance to (-13/3, Z0) along the image: %.2e", dev));
}

void c4(Criterion& c) {
    const double A_star = astar_p0().A_star;
    const double logC = std::log(bij_A_to_C(P0, A_star));
    double worst = 0;
    int compared = 0;
    for (int k = 0; k < 20; ++k) {
        // 20 values spread over ±0.3 decades of C around C*
        const double C = std::exp(logC + std::log(10.0) * (-0.3 + 0.6 * k / 19.0));
        const double A = bij_C_to_A(P0, C);
        const double x0 = 1e-6;
        EventSpec ev;
        ev.rtol = 1e-13;
        ev.stop_on_enter_r0 = false;
        const PhaseState start{launch_eta(P0, A, x0), launch_lC(P0, C, x0, LaunchOrder::Second)};
        const PhaseTrajectory tr = integrate_phase(P0, start, start.eta + 25.0, ev);

        ProfileOptions po;
        po.rtol = 1e-12;
        po.atol = 1e-16;
        po.after_min = AfterMinimum::ContinueGrowth;
        const ProfileSolution sol = integrate_profile(P0, A, 2.0 * std::exp(tr.eta_end()), po);

        double w = 0;
        const double e_lo = tr.eta_begin() + 3.0;
        const double e_hi = std::min(tr.eta_end(), std::log(sol.xi_end())) - 0.5;
        for (int i = 0; i <= 100 && e_hi > e_lo; ++i) {
            const double eta = e_lo + (e_hi - e_lo) * i / 100.0;
            const ProfilePoint pp = phase_to_profile(P0, eta, tr.at(eta));
            const ProfileSample ps = sol.at(pp.xi);
            if (ps.f < 1e-3 * A) continue;  // relative error meaningless next to a zero
            w = std::max(w, rel(pp.f, ps.f));
            ++compared;
        }
        worst = std::max(worst, w);
    }
    c.check(compared > 1000, fmt("compared %g (xi, f) points over 20 values of C", compared));
    c.check(worst < 1e-6, fmt("max relative |f_phase - f_shoot| = %.2e", worst));
}

void c5(Criterion& c) {
    const Derived d = derive_constants(P0);
    const double A_star = astar_p0().A_star;
    const double logC = std::log(bij_A_to_C(P0, A_star));
    const int n = 16;
    ClassifyOptions tight;
    tight.events.rtol = 1e-14;
    std::vector<ShootingClass> cls(n);
    bool stable = true, split = true, plane = true;
    for (int i = 0; i < n; ++i) {
        const int k = i < n / 2 ? i - n / 2 : i - n / 2 + 1;
        const double C = std::exp(logC + 0.1 * std::log(10.0) * k / (n / 2));
        const double A = bij_C_to_A(P0, C);
        const auto o = classify(P0, A);
        const auto t = classify(P0, A, tight);
        cls[i] = o.cls;
        stable = stable && o.cls == t.cls;
        // A decreases in C: small C is vanishing, large C grows
        const ShootingClass expect = C < std::exp(logC) ? ShootingClass::SetC_Vanishing : ShootingClass::SetA_MinGrowth;
        split = split && o.cls == expect;

        EventSpec ev;
        ev.rtol = 1e-13;
        ev.stop_on_enter_r0 = true;
        const PhaseState start{launch_eta(P0, A, 1e-6), launch_lC(P0, C, 1e-6, LaunchOrder::Second)};
        const PhaseTrajectory tr = integrate_phase(P0, start, start.eta + 40.0, ev);
        double ymin = 1e300;
        for (const auto& s : tr.samples) ymin = std::min(ymin, s.q.y);
        const Event* down = tr.first(EventKind::CrossPlaneYQ3, -1);
        if (o.cls == ShootingClass::SetC_Vanishing) plane = plane && down && down->state.z < d.Z0;
        else plane = plane && ymin > d.y_Q3;
    }
    const long nC = std::count(cls.begin(), cls.end(), ShootingClass::SetC_Vanishing);
    const long nA = std::count(cls.begin(), cls.end(), ShootingClass::SetA_MinGrowth);
    c.check(nC + nA == n && nC > 0 && nA > 0, fmt("two classes: %g vanishing + %g min-growth of %g", nC, nA, n));
    c.check(split, "classes split at C* (vanishing below, min-growth above)");
    c.check(plane, "vanishing family crosses y = -13/3 below Z0; min-growth family stays on y > -13/3");
    c.check(stable, "membership unchanged with rtol 1e-13 -> 1e-14");
}

void c6(Criterion& c) {
    const BisectionResult& b = astar_p0();
    const double width = (b.A_star_hi - b.A_star_lo) / b.A_star_lo;
    std::printf("  . A* = %.15g, bracket [%.15g, %.15g], %d iterations\n", b.A_star, b.A_star_lo, b.A_star_hi,
                b.iterations);
    c.check(width <= 1e-10, fmt("bracket relative width %.3e <= 1e-10", width));

    const auto g = golden("astar.json")["P0"];
    c.check(rel(b.A_star, g["A_star"].get<double>()) <= g["tolerance_rel"].get<double>(),
            fmt("golden A* %.15g, relative diff %.2e", g["A_star"].get<double>(), rel(b.A_star, g["A_star"].get<double>())));

    // independent scipy oracle, reproduced with its own launch settings
    ClassifyOptions first;
    first.order = LaunchOrder::First;
    first.x0 = 1e-8;
    BisectionOptions bo;
    bo.classify = first;
    bo.tol = 1e-12;
    const auto [lo, hi] = seed_bracket(P0, first);
    const BisectionResult fo = find_A_star(P0, lo, hi, bo);
    const double orc = golden("oracle.json")["P0"]["A_star_first_order"].get<double>();
    c.check(rel(fo.A_star, orc) < 1e-9, fmt("first-order launch A* %.15g vs scipy oracle %.15g", fo.A_star, orc));

    const double q = derive_constants(P0).q_tail;
    if (b.tail_fit) {
        c.check(rel(b.tail_fit->q_est, q) < 0.01,
                fmt("tail exponent on [10, 100]: %.6g vs 13/3", b.tail_fit->q_est));
    } else {
        c.check(false, "tail exponent on [10, 100] within 1% of 13/3: " + b.tail_fit_error);
    }
    if (b.natural_tail)
        std::printf("  . tail exponent %.6g on xi in [%.3g, %.3g] (widest window within 1%% of 13/3)\n",
                    b.natural_tail->q_est, b.natural_tail->xi_lo, b.natural_tail->xi_hi);

    const double d3 = distance_to_q3(P0, b.midpoint.final_state);
    std::printf("  . midpoint: class %s, stop %s at eta %.4g, state (%.4g, %.6g, %.6g)\n",
                std::string(to_string(b.midpoint.cls)).c_str(), std::string(to_string(b.midpoint.stop)).c_str(),
                b.midpoint.eta_end, b.midpoint.final_state.x, b.midpoint.final_state.y, b.midpoint.final_state.z);
    std::printf("  . min (y,z)-distance to the Q3 line %.3e at x = %.4g\n", b.midpoint.min_line_distance,
                b.midpoint.closest.q.x);
    c.check(d3 < 1e-3, fmt("distance to Q3 at budget end %.3e < 1e-3", d3));
}

void c7(Criterion& c) {
    const double A_star = astar_p0().A_star;
    ProfileOptions po;
    po.after_min = AfterMinimum::ContinueGrowth;
    bool small_ok = true;
    for (double k : {0.5, 1.0, 2.0, 4.0}) {
        const double A = A_star * std::pow(10.0, -k);
        const ProfileSolution s = integrate_profile(P0, A, 1e8 * profile_scale(P0, A), po);
        const bool ok = s.minimum && s.fprime_sign_changes == 1 && s.minimum->f_min > 0 && s.minimum->f_min < A;
        std::printf("  . A = %.4g: %s, f' sign changes %d, f_min/A = %.4g\n", A,
                    std::string(terminal_name(s.terminal)).c_str(), s.fprime_sign_changes,
                    s.minimum ? s.minimum->f_min / A : -1.0);
        small_ok = small_ok && ok;
    }
    c.check(small_ok, "small A: unique positive minimum with f_min in (0, A)");

    bool large_ok = true;
    double worst_slope = 0;
    for (double k : {0.5, 1.0, 2.0, 4.0}) {
        const double A = A_star * std::pow(10.0, k);
        const ProfileSolution s = integrate_profile(P0, A, 1e8 * profile_scale(P0, A), {});
        const auto* hz = std::get_if<HitZero>(&s.terminal);
        large_ok = large_ok && hz && hz->slope_fm < 0;
        if (hz) {
            const VanishSlope v = vanish_slope_check(P0, s);
            worst_slope = std::max(worst_slope, v.rel_error);
            std::printf("  . A = %.4g: xi0 = %.6g, (f^m)' = %.6g, law -xi0^-3/104 = %.6g\n", A, v.xi0,
                        v.slope_fm, v.slope_predicted);
        }
    }
    c.check(large_ok, "large A: profile hits zero with (f^m)' < 0");
    c.flag(worst_slope < 0.05, fmt("slope law within 5%%: worst relative error %.4g", worst_slope));
}

void c8(Criterion& c) {
    const auto show = [&](const AuditReport& r) {
        c.check(r.passed(), r.name + fmt(": %g samples, %g violations, worst margin %.3e", static_cast<double>(r.n_samples),
                                         static_cast<double>(r.n_violations), r.worst_margin));
    };
    show(flow_sign_audit(P0, 10000));
    show(no_return_audit(P0, 50));
    show(region_transit_audit(P0, 50));
    show(limit_trajectory_audit(P0));
}

void c9(Criterion& c) {
    const double alpha = derive_constants(P1).alpha;
    PdeConfig cfg;
    cfg.params = P1;
    cfg.R = 20.0;
    cfg.n = 2048;
    cfg.ic = IcConstant{1.0};
    const double tol_u = 1e-8;

    const ExtinctionReport r = run_until_extinction(cfg, tol_u);
    std::printf("  . n = %d: T_est = %.8g, %ld steps (%ld rejected); n = %d: T_est = %.8g\n", r.n, r.T_est, r.steps,
                r.rejected, r.n_coarse, r.T_coarse.value_or(NAN));
    c.check(r.extinguished && std::isfinite(r.T_est), fmt("extinguished, T_est = %.8g finite", r.T_est));
    c.check(r.T_coarse && rel(r.T_est, *r.T_coarse) < 0.02,
            fmt("T_est change under grid doubling %.3e < 2%%", r.T_coarse ? rel(r.T_est, *r.T_coarse) : NAN));
    if (r.fit) {
        const RateFit& f = *r.fit;
        std::printf("  . fit over %.3g decades of T-t: alpha = %.6g [%.6g, %.6g], residual %.3g\n", f.decades,
                    f.alpha_est, f.alpha_lo, f.alpha_hi, f.residual);
        c.check(rel(f.alpha_est, alpha) < 0.2, fmt("alpha_est %.6g within 20%% of %.3g", f.alpha_est, alpha));
        c.check(f.C1_min > 0, fmt("lower-rate constant C1 = min sup/(T-t)^alpha = %.4g > 0", f.C1_min));
        if (r.alpha_coarse) {
            const double dn = std::abs(f.alpha_est - *r.alpha_coarse);
            const double to_theory = std::min(std::abs(f.alpha_est - alpha), std::abs(*r.alpha_coarse - alpha));
            c.flag(dn < to_theory, fmt("rate fits at n and n/2 differ by %.3e, less than their distance %.3e to alpha", dn,
                                       to_theory));
        }
    } else {
        c.check(false, "rate fit available");
    }
    c.check(r.sup_monotone, "sup-norm non-increasing on every accepted step");
    c.check(r.radial_monotone, "radially non-increasing on every accepted step");
    c.check(r.nonnegative, "non-negative on every accepted step");

    PdeConfig small = cfg;
    small.R = 10.0;
    small.n = 512;
    const RadiusChoice rc = choose_outer_radius(small, tol_u);
    std::string trail;
    for (std::size_t i = 0; i < rc.radii.size(); ++i) trail += fmt(" R=%g:%.6g", rc.radii[i], rc.T_est[i]);
    c.check(rc.converged, "outer radius doubling settles below 1%:" + trail);

    const double A = 0.005;  // below A*(P1) = 0.0118, so min-then-growth
    SupersolutionSetup su{};
    const AuditReport a = supersolution_audit(cfg, A, 0.0, 1e-8, &su);
    std::printf("  . barrier A = %g, T = %.6g, f_min = %.4g, T^alpha f_min = %.4g\n", su.A, su.T, su.f_min,
                std::pow(su.T, alpha) * su.f_min);
    c.check(a.passed(), fmt("supersolution audit: %g node checks, %g violations", static_cast<double>(a.n_samples),
                            static_cast<double>(a.n_violations)));
}

void c10(Criterion& c) {
    const Derived d = derive_constants(P1);
    auto drift = [&](int n) {
        PdeConfig cfg;
        cfg.params = P1;
        cfg.r_inner = 1.0;
        cfg.R = 2.0;
        cfg.n = n;
        cfg.bc_outer = OuterBc::ExactStationary;
        cfg.ic = IcPowerTail{d.C0, d.q_tail};
        return stationary_drift_rate(cfg, 1e-3);
    };
    const double d32 = drift(32), d64 = drift(64), d128 = drift(128);
    std::printf("  . drift rate: n=32 %.4e, n=64 %.4e, n=128 %.4e\n", d32, d64, d128);
    c.check(d64 / d128 >= 3.5, fmt("refinement ratio n=64 -> 128: %.4f >= 3.5", d64 / d128));
}

}  // namespace

int main() {
    std::vector<Criterion> cs{
        {1, "derived constants at P0", 1},
        {2, "equilibrium Jacobians and spectra", 1},
        {3, "stationary solution oracle", 1},
        {4, "profile / phase equivalence", 120},
        {5, "trajectory family splits into two classes", 120},
        {6, "critical A* bisection at P0", 300},
        {7, "set structure of profiles", 120},
        {8, "invariant-region audits", 180},
        {9, "PDE extinction at P1", 600},
        {10, "stationary PDE validation", 120},
    };
    const std::vector<std::function<void(Criterion&)>> bodies{c1, c2, c3, c4, c5, c6, c7, c8, c9, c10};
    int failed = 0;
    for (std::size_t i = 0; i < cs.size(); ++i) failed += run(cs[i], bodies[i]);

    std::printf("%d of %zu criteria failed\n", failed, cs.size());
    return failed ? 1 : 0;
}
