#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "fdx/audit.hpp"
#include "fdx/classifier.hpp"
#include "fdx/error.hpp"
#include "fdx/io.hpp"
#include "fdx/parallel.hpp"
#include "fdx/pde.hpp"
#include "fdx/phase.hpp"
#include "fdx/profile.hpp"

namespace fdx::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

io::Provenance prov(const RunContext& ctx) { return {FDX_VERSION, ctx.config_hash, ctx.seed}; }

fs::path out(const RunContext& ctx, const std::string& name) { return fs::path(ctx.out_dir) / name; }

ojson params_json(const Params& P) {
    return {{"m", P.m()}, {"p", P.p()}, {"N", P.N()}, {"sigma", P.sigma()}};
}

void read_classify(Section s, ClassifyOptions& c) {
    c.x0 = s.num("x0", c.x0);
    c.order = s.str("launch_order", "second") == "first" ? LaunchOrder::First : LaunchOrder::Second;
    c.eta_budget = s.num("eta_budget", c.eta_budget);
    c.events.rtol = s.num("rtol", c.events.rtol);
    c.events.tol_q3 = s.num("tol_q3", c.events.tol_q3);
    s.finish();
}

}  // namespace

int cmd_derive(const RunContext& ctx) {
    Section root(ctx.config, "config");
    const Params P = read_params(root, kP0);
    root.finish();
    ojson j;
    j["params"] = params_json(P);
    j["derived"] = derive_constants(P);
    ojson eq = ojson::array();
    for (auto label : {EquilibriumLabel::Q1, EquilibriumLabel::Q2, EquilibriumLabel::Q3}) {
        try {
            eq.push_back(equilibrium_spectrum(P, label));
        } catch (const Error& e) {
            eq.push_back({{"label", std::string(to_string(label))}, {"error", e.what()}});
        }
    }
    j["equilibria"] = eq;
    io::write_json(out(ctx, "derived.json"), j, prov(ctx));
    return 0;
}

int cmd_profile(const RunContext& ctx) {
    Section root(ctx.config, "config");
    const Params P = read_params(root, kP0);
    Section s = root.sub("profile");
    const double A = s.num("A");
    ProfileOptions po;
    po.rtol = s.num("rtol", po.rtol);
    po.atol = s.num("atol", po.atol);
    po.after_min = s.str("after_min", "stop") == "continue" ? AfterMinimum::ContinueGrowth : AfterMinimum::StopAtA;
    const double xi_max = s.num("xi_max", 1e6 * profile_scale(P, A));
    const auto tail = s.nums("tail_window", {});
    s.finish();
    root.finish();
    if (!tail.empty() && tail.size() != 2) throw Error(ErrorCode::Config, "config.profile.tail_window needs two numbers");

    const ProfileSolution sol = integrate_profile(P, A, xi_max, po);
    io::CsvTable t({"xi", "f", "fprime"});
    t.provenance(prov(ctx));
    t.meta("A", io::format_double(A));
    t.meta("terminal", std::string(terminal_name(sol.terminal)));
    for (const auto& p : sol.samples) t.row({p.xi, p.f, p.fprime});
    t.write(out(ctx, "profile.csv"));

    ojson j;
    j["params"] = params_json(P);
    j["A"] = A;
    j["C"] = bij_A_to_C(P, A);
    j["terminal"] = sol.terminal;
    j["xi_end"] = sol.xi_end();
    j["fprime_sign_changes"] = sol.fprime_sign_changes;
    if (sol.minimum) j["minimum"] = {{"xi_min", sol.minimum->xi_min}, {"f_min", sol.minimum->f_min}};
    if (std::holds_alternative<HitZero>(sol.terminal)) {
        const VanishSlope v = vanish_slope_check(P, sol);
        j["vanish_slope"] = {{"xi0", v.xi0},
                             {"slope_fm", v.slope_fm},
                             {"slope_predicted", v.slope_predicted},
                             {"rel_error", v.rel_error}};
    }
    if (tail.size() == 2) {
        try {
            j["tail_fit"] = tail_power_fit(sol, tail[0], tail[1]);
        } catch (const Error& e) {
            j["tail_fit"] = {{"error", e.what()}};
        }
    }
    io::write_json(out(ctx, "profile.json"), j, prov(ctx));
    return 0;
}

int cmd_phase(const RunContext& ctx) {
    Section root(ctx.config, "config");
    const Params P = read_params(root, kP0);
    Section s = root.sub("phase");
    const bool has_C = s.has("C");
    const double C = has_C ? s.num("C") : 0.0;
    const double A = has_C ? bij_C_to_A(P, C) : s.num("A");
    const double x0 = s.num("x0", 1e-6);
    const double span = s.num("eta_span", 40.0);
    EventSpec ev;
    ev.rtol = s.num("rtol", 1e-13);
    ev.stop_on_escape = s.flag("stop_on_escape", true);
    ev.stop_on_enter_r0 = s.flag("stop_on_enter_r0", false);
    s.finish();
    root.finish();

    const double Cv = has_C ? C : bij_A_to_C(P, A);
    const PhaseState start{launch_eta(P, A, x0), launch_lC(P, Cv, x0, LaunchOrder::Second)};
    const PhaseTrajectory tr = integrate_phase(P, start, start.eta + span, ev);
    io::CsvTable t({"eta", "x", "y", "z"});
    t.provenance(prov(ctx));
    t.meta("C", io::format_double(Cv));
    t.meta("A", io::format_double(A));
    t.meta("stop", std::string(to_string(tr.stop)));
    for (const auto& p : tr.samples) t.row({p.eta, p.q.x, p.q.y, p.q.z});
    t.write(out(ctx, "phase.csv"));
    ojson j;
    j["params"] = params_json(P);
    j["C"] = Cv;
    j["A"] = A;
    j["stop"] = std::string(to_string(tr.stop));
    j["events"] = tr.events;
    io::write_json(out(ctx, "phase.json"), j, prov(ctx));
    return 0;
}

int cmd_classify(const RunContext& ctx) {
    Section root(ctx.config, "config");
    const Params P = read_params(root, kP0);
    Section s = root.sub("classify");
    const auto As = s.nums("A");
    ClassifyOptions co;
    read_classify(s.sub("options"), co);
    s.finish();
    root.finish();
    if (As.empty()) throw Error(ErrorCode::Config, "config.classify.A is required");

    const auto res = parallel_map<ClassificationOutcome>(
        As.size(), [&](std::size_t i) { return classify(P, As[i], co); }, ctx.threads);
    io::CsvTable t({"A", "C", "class", "stop", "decided_at_eta", "min_line_distance"});
    t.provenance(prov(ctx));
    ojson arr = ojson::array();
    for (const auto& r : res) {
        t.row({r.A, r.C, std::string(to_string(r.cls)), std::string(to_string(r.stop)), r.decided_at_eta,
               r.min_line_distance});
        arr.push_back(r);
    }
    t.write(out(ctx, "classify.csv"));
    io::write_json(out(ctx, "classify.json"), ojson{{"params", params_json(P)}, {"outcomes", arr}}, prov(ctx));
    return 0;
}

namespace {

BisectionResult run_astar(const Params& P, Section s) {
    BisectionOptions bo;
    bo.tol = s.num("tol", bo.tol);
    bo.tail_lo = s.num("tail_lo", bo.tail_lo);
    bo.tail_hi = s.num("tail_hi", bo.tail_hi);
    read_classify(s.sub("options"), bo.classify);
    const bool lo_given = s.has("A_lo");
    double lo = s.num("A_lo", 0.0), hi = s.num("A_hi", 0.0);
    s.finish();
    if (!lo_given) std::tie(lo, hi) = seed_bracket(P, bo.classify);
    return find_A_star(P, lo, hi, bo);
}

}  // namespace

int cmd_find_astar(const RunContext& ctx) {
    Section root(ctx.config, "config");
    const Params P = read_params(root, kP0);
    const BisectionResult b = run_astar(P, root.sub("find_astar"));
    root.finish();
    ojson j;
    j["params"] = params_json(P);
    j["q_tail_theory"] = derive_constants(P).q_tail;
    j["result"] = b;
    io::write_json(out(ctx, "astar.json"), j, prov(ctx));
    for (const auto& w : b.warnings) std::cerr << "warning: " << w << "\n";
    return 0;
}

int cmd_verify(const RunContext& ctx) {
    Section root(ctx.config, "config");
    const Params P = read_params(root, kP0);
    Section s = root.sub("verify");
    const long n_flow = s.integer("n_flow", 10000);
    const long n_traj = s.integer("n_traj", 50);
    const double z0 = s.num("z0", 1e-8);
    AuditOptions ao;
    ao.seed = ctx.seed;
    ao.box = s.num("box", 0.0);
    read_classify(s.sub("options"), ao.classify);
    s.finish();
    root.finish();

    const auto reports = parallel_map<AuditReport>(
        4,
        [&](std::size_t k) {
            switch (k) {
                case 0: return flow_sign_audit(P, n_flow, ao);
                case 1: return no_return_audit(P, n_traj, ao);
                case 2: return region_transit_audit(P, n_traj, ao);
                default: return limit_trajectory_audit(P, z0, ao);
            }
        },
        ctx.threads);
    ojson arr = ojson::array();
    std::vector<std::string> failing;
    for (const auto& r : reports) {
        arr.push_back(to_json(r));
        if (!r.passed()) failing.push_back(r.name);
    }
    const AuditReport all = merge_reports("verify", reports);
    ojson j;
    j["params"] = params_json(P);
    j["passed"] = failing.empty();
    j["failing"] = failing;
    j["summary"] = to_json(all);
    j["audits"] = arr;
    io::write_json(out(ctx, "verify.json"), j, prov(ctx));
    for (const auto& f : failing) std::cerr << "audit failed: " << f << "\n";
    return failing.empty() ? 0 : 1;
}

int cmd_fig1(const RunContext& ctx) {
    Section root(ctx.config, "config");
    const Params P = read_params(root, kP0);
    const Derived d = derive_constants(P);
    Section s = root.sub("fig1");
    const int n_traj = static_cast<int>(s.integer("n_traj", 16));
    const double decades = s.num("decades", 0.1);
    const auto axes = s.strs("axes", {"y", "z"});
    const double x0 = s.num("x0", 1e-6);
    const double eta_span = s.num("eta_span", 30.0);
    const auto lim = s.nums("limits", {3.0 * d.y_Q3, 1.0, 0.0, 3.0 * d.Z0});
    const bool given_astar = s.has("A_star");
    double A_star = s.num("A_star", 0.0);
    ClassifyOptions co;
    read_classify(s.sub("options"), co);
    s.finish();
    root.finish();
    if (n_traj < 2 || n_traj % 2) throw Error(ErrorCode::Config, "config.fig1.n_traj must be even and >= 2");
    if (axes.size() != 2) throw Error(ErrorCode::Config, "config.fig1.axes needs two of x, y, z");
    for (const auto& a : axes)
        if (a != "x" && a != "y" && a != "z") throw Error(ErrorCode::Config, "config.fig1.axes entries must be x, y or z");
    if (lim.size() != 4) throw Error(ErrorCode::Config, "config.fig1.limits needs four numbers");

    if (!given_astar) {
        BisectionOptions bo;
        bo.tol = 1e-8;
        bo.classify = co;
        const auto [lo, hi] = seed_bracket(P, co);
        A_star = find_A_star(P, lo, hi, bo).A_star;
    }
    const double logC_star = std::log(bij_A_to_C(P, A_star));
    const int half = n_traj / 2;

    struct Traj {
        double C, A;
        ClassificationOutcome cls;
        PhaseTrajectory tr;
    };
    const auto family = parallel_map<Traj>(
        static_cast<std::size_t>(n_traj),
        [&](std::size_t i) {
            const int k = static_cast<int>(i) < half ? static_cast<int>(i) - half : static_cast<int>(i) - half + 1;
            const double C = std::exp(logC_star + decades * std::log(10.0) * k / half);
            const double A = bij_C_to_A(P, C);
            Traj t{C, A, classify(P, A, co), {}};
            EventSpec ev = co.events;
            ev.stop_on_escape = true;
            const PhaseState start{launch_eta(P, A, x0, co.order), launch_lC(P, C, x0, co.order)};
            t.tr = integrate_phase(P, start, start.eta + eta_span, ev);
            return t;
        },
        ctx.threads);

    auto pick = [&](const PhasePoint& q, const std::string& a) { return a == "x" ? q.x : (a == "y" ? q.y : q.z); };
    io::SvgPlot plot(800, 600);
    plot.set_limits(lim[0], lim[1], lim[2], lim[3]);
    plot.set_labels("Trajectories l_C leaving Q1 (m=" + io::format_double(P.m()) + ", p=" + io::format_double(P.p()) +
                        ", N=" + std::to_string(P.N()) + ", sigma=" + io::format_double(P.sigma()) + ")",
                    axes[0], axes[1]);
    plot.comment("fdx " FDX_VERSION " config_hash " + ctx.config_hash + " seed " + std::to_string(ctx.seed));
    auto plane = [&](const std::string& axis, double v, const std::string& label) {
        if (axes[0] == axis) plot.vline(v, "#555555", label);
        if (axes[1] == axis) plot.hline(v, "#555555", label);
    };
    auto short_num = [](double v) {
        char b[32];
        std::snprintf(b, sizeof b, "%.4g", v);
        return std::string(b);
    };
    plane("y", d.y_Q3, "y = " + short_num(d.y_Q3));
    plane("z", d.Z0, "z = Z0 = " + short_num(d.Z0));

    ojson summary = ojson::array();
    int nC = 0, nA = 0, nOther = 0;
    for (std::size_t i = 0; i < family.size(); ++i) {
        const auto& f = family[i];
        const std::string cls(to_string(f.cls.cls));
        std::string color = "#888888";
        if (f.cls.cls == ShootingClass::SetC_Vanishing) ++nC, color = "#1f5fbf";
        else if (f.cls.cls == ShootingClass::SetA_MinGrowth) ++nA, color = "#c8322a";
        else ++nOther;
        std::vector<std::pair<double, double>> pts;
        io::CsvTable t({"eta", "x", "y", "z"});
        t.provenance(prov(ctx));
        t.meta("class", cls);
        t.meta("C", io::format_double(f.C));
        t.meta("A", io::format_double(f.A));
        t.meta("stop", std::string(to_string(f.tr.stop)));
        for (const auto& p : f.tr.samples) {
            t.row({p.eta, p.q.x, p.q.y, p.q.z});
            pts.emplace_back(pick(p.q, axes[0]), pick(p.q, axes[1]));
        }
        char name[32];
        std::snprintf(name, sizeof name, "traj_%02zu.csv", i);
        t.write(out(ctx, name));
        plot.polyline(pts, color, 1.2);
        summary.push_back({{"file", name}, {"C", f.C}, {"A", f.A}, {"class", cls}});
    }
    plot.legend("vanishing (set C)", "#1f5fbf");
    plot.legend("min then growth (set A)", "#c8322a");
    io::write_file_atomic(out(ctx, "fig1.svg"), plot.str());
    ojson j;
    j["params"] = params_json(P);
    j["A_star"] = A_star;
    j["C_star"] = std::exp(logC_star);
    j["counts"] = {{"SetC_Vanishing", nC}, {"SetA_MinGrowth", nA}, {"other", nOther}};
    j["trajectories"] = summary;
    io::write_json(out(ctx, "fig1.json"), j, prov(ctx));
    return 0;
}

int cmd_pde(const RunContext& ctx) {
    Section root(ctx.config, "config");
    const Params P = read_params(root, kP1);
    const Derived d = derive_constants(P);
    Section s = root.sub("pde");
    PdeConfig c;
    c.params = P;
    c.R = s.num("R", 20.0);
    c.n = static_cast<int>(s.integer("n", 512));
    c.r_inner = s.num("r_inner", 0.0);
    const std::string bc = s.str("bc_outer", "dirichlet0");
    if (bc == "exact_stationary") c.bc_outer = OuterBc::ExactStationary;
    else if (bc != "dirichlet0") throw Error(ErrorCode::Config, "config.pde.bc_outer must be dirichlet0 or exact_stationary");
    {
        Section dt = s.sub("dt");
        c.dt.dt0 = dt.num("dt0", c.dt.dt0);
        c.dt.dt_min = dt.num("dt_min", c.dt.dt_min);
        c.dt.dt_max = dt.num("dt_max", c.dt.dt_max);
        c.dt.target = dt.num("target", c.dt.target);
        c.dt.reject = dt.num("reject", c.dt.reject);
        dt.finish();
    }
    {
        Section ic = s.sub("ic");
        const std::string type = ic.str("type", "constant");
        if (type == "constant") {
            c.ic = IcConstant{ic.num("K", 1.0)};
        } else if (type == "power_tail") {
            c.ic = IcPowerTail{ic.num("amplitude", d.C0), ic.num("exponent", d.q_tail)};
        } else if (type == "radial_table") {
            c.ic = IcRadialTable{ic.nums("r"), ic.nums("u")};
        } else {
            throw Error(ErrorCode::Config, "config.pde.ic.type must be constant, power_tail or radial_table");
        }
        ic.finish();
    }
    const double tol_rel = s.num("tol_u_rel", 1e-8);
    RunOptions ro;
    ro.refine = s.flag("refine", true);
    ro.window_frac = s.num("window_frac", 0.5);
    ro.snapshot_times = s.nums("snapshot_times", {});
    const bool choose_R = s.flag("choose_R", false);
    const bool has_super = s.has("supersolution_A");
    const double A_super = s.num("supersolution_A", 0.0);
    s.finish();
    root.finish();
    validate_config(c);

    const RadialGrid g0 = make_grid(c);
    const double u0 = [&] {
        double m = 0;
        for (double v : initial_state(c, g0).u) m = std::max(m, v);
        return m;
    }();
    const double tol_u = tol_rel * u0;

    ojson j;
    j["params"] = params_json(P);
    j["alpha_theory"] = d.alpha;
    if (choose_R) {
        const RadiusChoice rc = choose_outer_radius(c, tol_u);
        j["radius_choice"] = {{"R", rc.R}, {"radii", rc.radii}, {"T_est", rc.T_est}, {"converged", rc.converged}};
        c.n = static_cast<int>(std::lround(c.n * rc.R / c.R));
        c.R = rc.R;
    }
    j["R"] = c.R;
    j["n"] = c.n;
    j["tol_u"] = tol_u;

    int snap = 0;
    ro.on_snapshot = [&](double t, const std::vector<double>& r, const std::vector<double>& u) {
        io::CsvTable tab({"r", "u"});
        tab.provenance(prov(ctx));
        tab.meta("t", io::format_double(t));
        for (std::size_t i = 0; i < r.size(); ++i) tab.row({r[i], u[i]});
        char name[40];
        std::snprintf(name, sizeof name, "pde_snapshot_%03d.csv", snap++);
        tab.write(out(ctx, name));
    };
    const ExtinctionReport rep = run_until_extinction(c, tol_u, ro);
    j["report"] = to_json(rep);

    io::CsvTable trace({"t", "sup_norm", "mass"});
    trace.provenance(prov(ctx));
    for (const auto& p : rep.trace) trace.row({p.t, p.sup, p.mass});
    trace.write(out(ctx, "pde_trace.csv"));

    int code = rep.extinguished ? 0 : 1;
    if (has_super) {
        const AuditReport a = supersolution_audit(c, A_super, 0.0, tol_rel);
        j["supersolution"] = to_json(a);
        if (!a.passed()) {
            std::cerr << "audit failed: supersolution\n";
            code = 1;
        }
    }
    io::write_json(out(ctx, "pde_report.json"), j, prov(ctx));
    if (!rep.extinguished) std::cerr << "no extinction: " << rep.stop_reason << "\n";
    return code;
}

}  // namespace fdx::cli
