#include "fdx/audit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "fdx/error.hpp"
#include "fdx/phase.hpp"

namespace fdx {

namespace {

class Recorder {
public:
    Recorder(AuditReport& r) : r_(r) { r_.worst_margin = std::numeric_limits<double>::infinity(); }

    void check(bool ok, double margin, const std::string& what, double eta, const PhasePoint& q) {
        r_.worst_margin = std::min(r_.worst_margin, margin);
        if (ok) return;
        ++r_.n_violations;
        if (r_.violations.size() < kMaxRecordedViolations) r_.violations.push_back({what, eta, q, margin});
    }

    void flag(bool ok, const std::string& what, double eta, const PhasePoint& q) {
        if (ok) return;
        ++r_.n_violations;
        if (r_.violations.size() < kMaxRecordedViolations) r_.violations.push_back({what, eta, q, 0.0});
    }

private:
    AuditReport& r_;
};

// Uniform on the open interval (a, b).
double open_uniform(std::mt19937_64& rng, double a, double b) {
    std::uniform_real_distribution<double> u(a, b);
    for (;;) {
        const double v = u(rng);
        if (v > a && v < b) return v;
    }
}

double box_size(const Params& params, const AuditOptions& opt) {
    return opt.box > 0.0 ? opt.box : 10.0 * std::max(1.0, derive_constants(params).Z0);
}

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

}  // namespace

AuditReport flow_sign_audit(const Params& params, long n, const AuditOptions& opt) {
    if (n < 1) throw Error(ErrorCode::BadRange, "n must be at least 1");
    AuditReport rep;
    rep.name = "flow_sign";
    rep.seed = opt.seed;
    Recorder rec(rep);
    std::mt19937_64 rng(opt.seed);
    const Derived d = derive_constants(params);
    const double m = params.m(), p = params.p(), s = params.sigma();
    const double B = box_size(params, opt);
    const double ybox = std::max(10.0, 2.0 * d.q_tail);

    auto agree = [](double F, double flux) {
        return std::abs(F - flux) <= 1e-12 * std::max({1.0, std::abs(F), std::abs(flux)});
    };

    for (long i = 0; i < n; ++i) {
        // z = Z0 wall of ℛ, normal (0,0,1)
        {
            const PhasePoint q{open_uniform(rng, 0.0, B), open_uniform(rng, d.y_Q3, d.y_Q3 + ybox), d.Z0};
            const double F1 = d.Z0 * (s + 2.0 + (p - m) * q.y);
            const double flux = dot(vector_field(params, q), {0.0, 0.0, 1.0});
            rec.check(F1 > 0.0 && flux > 0.0 && agree(F1, flux), std::min(F1, flux), "F1 on z = Z0", 0.0, q);
        }
        // y = y_Q3 wall of ℛ, normal (0,1,0)
        {
            const PhasePoint q{open_uniform(rng, 0.0, B), d.y_Q3, open_uniform(rng, d.Z0, d.Z0 + B)};
            const double F2 = q.z - d.Z0;
            const double flux = dot(vector_field(params, q), {0.0, 1.0, 0.0});
            rec.check(F2 > 0.0 && flux > 0.0 && agree(F2, flux), std::min(F2, flux), "F2 on y = y_Q3", 0.0, q);
        }
        // y = 0 wall of ℛ₀, normal (0,1,0), flux z − x
        {
            const double x = open_uniform(rng, 0.0, B);
            const PhasePoint q{x, 0.0, open_uniform(rng, x, x + B)};
            const double G = q.z - q.x;
            const double flux = dot(vector_field(params, q), {0.0, 1.0, 0.0});
            rec.check(G > 0.0 && flux > 0.0 && agree(G, flux), std::min(G, flux), "z - x on y = 0", 0.0, q);
        }
        // z = x wall of ℛ₀, normal (−1,0,1)
        {
            const double x = open_uniform(rng, 0.0, B);
            const PhasePoint q{x, open_uniform(rng, 0.0, ybox), x};
            const double F3 = q.z * (s + (p - 1.0) * q.y);
            const double flux = dot(vector_field(params, q), {-1.0, 0.0, 1.0});
            rec.check(F3 > 0.0 && flux > 0.0 && agree(F3, flux), std::min(F3, flux), "F3 on z = x", 0.0, q);
        }
    }
    rep.n_samples = 4 * n;
    rep.details["box"] = B;
    rep.details["y_box"] = ybox;
    rep.details["note"] = "finite sampling window of unbounded planes";
    return rep;
}

AuditReport no_return_audit(const Params& params, long n_traj, const AuditOptions& opt) {
    if (n_traj < 1) throw Error(ErrorCode::BadRange, "n_traj must be at least 1");
    AuditReport rep;
    rep.name = "no_return";
    rep.seed = opt.seed;
    Recorder rec(rep);
    std::mt19937_64 rng(opt.seed);
    const Derived d = derive_constants(params);
    const auto [A_lo, A_hi] = seed_bracket(params, opt.classify);
    rep.details["A_seed_bracket"] = {A_lo, A_hi};

    long escapes = 0;
    for (long k = 0; k < n_traj; ++k) {
        const double A = A_hi * std::pow(10.0, open_uniform(rng, 0.0, 6.0));
        const double C = bij_A_to_C(params, A);
        PhaseState start{launch_eta(params, A, opt.classify.x0, opt.classify.order),
                         launch_lC(params, C, opt.classify.x0, opt.classify.order)};
        EventSpec spec = opt.classify.events;
        spec.stop_on_escape = true;
        const auto tr = integrate_phase(params, start, start.eta + opt.eta_budget, spec);
        ++rep.n_samples;

        const Event* cross = tr.first(EventKind::CrossPlaneYQ3, -1);
        if (!cross) {
            rec.flag(false, "no downward crossing of y = y_Q3", tr.eta_end(), tr.samples.back().q);
            continue;
        }
        rec.check(cross->state.z < d.Z0, d.Z0 - cross->state.z, "crossing with z >= Z0", cross->eta, cross->state);

        const PhaseState* prev = nullptr;
        for (const auto& smp : tr.samples) {
            if (smp.eta <= cross->eta) continue;
            rec.check(smp.q.y < d.y_Q3, d.y_Q3 - smp.q.y, "returned above y_Q3", smp.eta, smp.q);
            if (prev) {
                const double dy = prev->q.y - smp.q.y, dz = prev->q.z - smp.q.z;
                rec.check(dy >= 0.0, dy, "y not decreasing", smp.eta, smp.q);
                rec.check(dz >= 0.0 || smp.q.z == 0.0, dz, "z not decreasing", smp.eta, smp.q);
            }
            prev = &smp;
        }
        for (const auto& e : tr.events)
            if (e.kind == EventKind::CrossPlaneYQ3 && e.eta > cross->eta)
                rec.flag(false, "second crossing of y = y_Q3", e.eta, e.state);
        if (tr.stop == StopReason::NearQ5Escape) ++escapes;
        else rec.flag(false, std::string("terminated by ") + std::string(to_string(tr.stop)), tr.eta_end(), tr.samples.back().q);
    }
    rep.details["n_escape"] = escapes;
    return rep;
}

AuditReport region_transit_audit(const Params& params, long n_traj, const AuditOptions& opt) {
    if (n_traj < 1) throw Error(ErrorCode::BadRange, "n_traj must be at least 1");
    AuditReport rep;
    rep.name = "region_transit";
    rep.seed = opt.seed;
    Recorder rec(rep);
    std::mt19937_64 rng(opt.seed);
    const Derived d = derive_constants(params);
    const double B = box_size(params, opt);
    const auto [A_lo, A_hi] = seed_bracket(params, opt.classify);
    rep.details["A_seed_bracket"] = {A_lo, A_hi};

    long from_lC = 0, from_random = 0, strip_pairs = 0;
    double min_ratio_gain = std::numeric_limits<double>::infinity();
    for (long k = 0; k < n_traj; ++k) {
        const double A = A_lo * std::pow(10.0, -open_uniform(rng, 0.0, 6.0));
        const double C = bij_A_to_C(params, A);
        PhaseState start{launch_eta(params, A, opt.classify.x0, opt.classify.order),
                         launch_lC(params, C, opt.classify.x0, opt.classify.order)};
        EventSpec spec = opt.classify.events;
        spec.stop_on_escape = true;
        spec.stop_on_enter_r0 = false;

        auto entered_r_below = [](const PhaseTrajectory& t) -> const Event* {
            for (const auto& e : t.events)
                if (e.kind == EventKind::EnterR && e.direction > 0 && e.state.y < 0.0) return &e;
            return nullptr;
        };

        PhaseTrajectory tr = integrate_phase(params, start, start.eta + opt.eta_budget, spec);
        if (entered_r_below(tr)) {
            ++from_lC;
        } else {
            // fallback: a random point of ℛ ∩ {y < 0}
            start = {0.0, {open_uniform(rng, 0.0, B), open_uniform(rng, d.y_Q3, 0.0),
                           open_uniform(rng, d.Z0, d.Z0 + B)}};
            tr = integrate_phase(params, start, opt.eta_budget, spec);
            ++from_random;
        }
        ++rep.n_samples;

        const Event* in_r = entered_r_below(tr);
        if (!in_r) {
            rec.flag(false, "no entry into R at y < 0", tr.eta_end(), tr.samples.back().q);
            continue;
        }
        const Event* in_r0 = nullptr;
        for (const auto& e : tr.events)
            if (e.kind == EventKind::EnterR0 && e.direction > 0 && e.eta >= in_r->eta) {
                in_r0 = &e;
                break;
            }
        if (!in_r0) {
            rec.flag(false, "BudgetExhausted: no entry into R0", tr.eta_end(), tr.samples.back().q);
            continue;
        }
        // ℛ invariance up to the entry into ℛ₀
        for (const auto& e : tr.events)
            if (e.kind == EventKind::EnterR && e.direction < 0 && e.eta > in_r->eta)
                rec.flag(false, "left R", e.eta, e.state);

        // strip monotonicity of x between entering ℛ and ℛ₀
        const PhaseState* prev = nullptr;
        for (const auto& smp : tr.samples) {
            if (smp.eta < in_r->eta || smp.eta > in_r0->eta) continue;
            if (prev) {
                const bool minus_prev = prev->q.y > d.y_Q3 && prev->q.y <= d.y_strip;
                const bool minus_now = smp.q.y > d.y_Q3 && smp.q.y <= d.y_strip;
                const bool plus_prev = prev->q.y > d.y_strip && prev->q.y < 0.0;
                const bool plus_now = smp.q.y > d.y_strip && smp.q.y < 0.0;
                if (minus_prev && minus_now) {
                    ++strip_pairs;
                    const double dx = prev->q.x - smp.q.x;
                    rec.check(dx >= 0.0, dx, "x not decreasing in X-", smp.eta, smp.q);
                } else if (plus_prev && plus_now) {
                    ++strip_pairs;
                    const double dx = smp.q.x - prev->q.x;
                    rec.check(dx >= 0.0, dx, "x not increasing in X+", smp.eta, smp.q);
                }
            }
            prev = &smp;
        }

        // continue past the entry and re-audit ℛ₀ on the tail
        PhaseState s0{in_r0->eta, in_r0->state};
        EventSpec tail_spec = spec;
        tail_spec.stop_on_escape = false;
        const auto tail = integrate_phase(params, s0, s0.eta + opt.tail_span, tail_spec);
        for (const auto& smp : tail.samples) {
            if (smp.eta <= s0.eta) continue;
            const double g = std::min(smp.q.y, smp.q.z - smp.q.x);
            rec.check(g > 0.0, g, "left R0", smp.eta, smp.q);
        }
        const double r0 = in_r0->state.z / in_r0->state.x;
        const auto& last = tail.samples.back().q;
        const double gain = (last.z / last.x) / r0;
        min_ratio_gain = std::min(min_ratio_gain, gain);
        rec.check(gain >= 10.0, gain - 10.0, "z/x grew less than 10x after entering R0", tail.eta_end(), last);
    }
    rep.details["from_lC"] = from_lC;
    rep.details["from_random_points"] = from_random;
    rep.details["strip_pairs_checked"] = strip_pairs;
    rep.details["min_z_over_x_gain"] = min_ratio_gain;
    rep.details["case3_oscillation"] = "no counterexample within budget";
    return rep;
}

AuditReport limit_trajectory_audit(const Params& params, double z0, const AuditOptions& opt) {
    AuditReport rep;
    rep.name = "limit_trajectories";
    rep.seed = opt.seed;
    Recorder rec(rep);
    const Derived d = derive_constants(params);
    const double m = params.m(), p = params.p(), s = params.sigma();
    const int N = params.N();

    const double p_F = m + (s + 2.0) / N;
    rep.details["p_F"] = p_F;
    rec.check(p < p_F, p_F - p, "p < p_F", 0.0, {});

    // l_∞ for z0 and z0/10
    for (double zz : {z0, 0.1 * z0}) {
        EventSpec spec = opt.classify.events;
        spec.stop_on_escape = true;
        const PhaseState start{0.0, launch_l_inf(params, zz)};
        const auto tr = integrate_phase(params, start, opt.tail_span, spec);
        ++rep.n_samples;
        const Event* in = tr.first(EventKind::EnterR0, +1);
        rec.flag(in != nullptr, "l_inf did not enter R0", tr.eta_end(), tr.samples.back().q);
        for (const auto& smp : tr.samples) {
            if (smp.eta <= 0.0) continue;
            const double g = std::min(smp.q.y, smp.q.z - smp.q.x);
            rec.check(g > 0.0, g, "l_inf left R0", smp.eta, smp.q);
            rec.flag(smp.q.x == 0.0, "l_inf left the plane x = 0", smp.eta, smp.q);
        }
    }

    // l₀ in the plane z = 0
    {
        EventSpec spec = opt.classify.events;
        spec.stop_on_escape = true;
        const double x0 = opt.classify.x0;
        const PhaseState start{0.0, launch_lC(params, 0.0, x0, LaunchOrder::Second)};
        const auto tr = integrate_phase(params, start, opt.eta_budget, spec);
        ++rep.n_samples;
        const Event* cross = tr.first(EventKind::CrossPlaneYQ3, -1);
        rec.flag(cross != nullptr, "l0 did not cross y = y_Q3", tr.eta_end(), tr.samples.back().q);
        rec.flag(tr.stop == StopReason::NearQ5Escape, "l0 did not escape to Q5", tr.eta_end(), tr.samples.back().q);
        const double kappa = (p - m) / (s + 2.0);
        for (const auto& smp : tr.samples) {
            const double g = -kappa * smp.q.x - smp.q.y;
            rec.check(g > 0.0, g / std::max(smp.q.x, 1e-300), "l0 above y = -(p-m)x/(sigma+2)", smp.eta, smp.q);
            rec.flag(smp.q.z == 0.0, "l0 left the plane z = 0", smp.eta, smp.q);
        }
        rep.details["l0_cross_eta"] = cross ? cross->eta : std::numeric_limits<double>::quiet_NaN();
    }
    rep.details["z0"] = z0;
    rep.details["y_Q3"] = d.y_Q3;
    return rep;
}

AuditReport merge_reports(const std::string& name, const std::vector<AuditReport>& parts) {
    AuditReport out;
    out.name = name;
    out.worst_margin = std::numeric_limits<double>::infinity();
    nlohmann::ordered_json sub = nlohmann::ordered_json::array();
    for (const auto& p : parts) {
        out.n_samples += p.n_samples;
        out.n_violations += p.n_violations;
        out.worst_margin = std::min(out.worst_margin, p.worst_margin);
        out.seed = p.seed;
        for (const auto& v : p.violations)
            if (out.violations.size() < kMaxRecordedViolations) out.violations.push_back(v);
        out.artifacts.insert(out.artifacts.end(), p.artifacts.begin(), p.artifacts.end());
        sub.push_back(to_json(p));
    }
    out.details["parts"] = sub;
    return out;
}

nlohmann::ordered_json to_json(const AuditReport& r) {
    nlohmann::ordered_json v = nlohmann::ordered_json::array();
    for (const auto& x : r.violations)
        v.push_back({{"check", x.check}, {"eta", x.eta}, {"x", x.state.x}, {"y", x.state.y},
                     {"z", x.state.z}, {"margin", x.margin}});
    nlohmann::ordered_json j{
        {"name", r.name},
        {"passed", r.passed()},
        {"n_samples", r.n_samples},
        {"n_violations", r.n_violations},
        {"worst_margin", std::isfinite(r.worst_margin) ? nlohmann::ordered_json(r.worst_margin) : nlohmann::ordered_json(nullptr)},
        {"seed", r.seed},
        {"artifacts", r.artifacts},
        {"violations", v},
        {"details", r.details},
    };
    return j;
}

}  // namespace fdx
