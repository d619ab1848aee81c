#include "fdx/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fdx/error.hpp"

namespace fdx {

std::string_view to_string(ShootingClass c) noexcept {
    switch (c) {
        case ShootingClass::SetC_Vanishing: return "SetC_Vanishing";
        case ShootingClass::SetA_MinGrowth: return "SetA_MinGrowth";
        case ShootingClass::Boundary_TailDecay: return "Boundary_TailDecay";
        case ShootingClass::Undecided: return "Undecided";
    }
    return "?";
}

ClassificationOutcome classify(const Params& params, double A, const ClassifyOptions& opt) {
    if (!(A > 0.0) || !std::isfinite(A)) throw Error(ErrorCode::BadRange, "A must be positive");
    ClassificationOutcome out;
    out.A = A;
    const double log_C = log_bij_A_to_C(params, std::log(A));
    out.C = std::exp(log_C);

    PhaseState start;
    start.eta = launch_eta(params, A, opt.x0, opt.order);
    start.q = launch_lC(params, out.C, opt.x0, opt.order);
    if (out.C == 0.0 || !std::isfinite(out.C)) {
        // C under/overflows double: launch z directly in log space
        const double q = 0.5 * (params.sigma() + 2.0);
        start.q.z = std::exp(log_C + q * std::log(opt.x0));
    }
    out.eta_launch = start.eta;

    EventSpec spec = opt.events;
    spec.stop_on_enter_r0 = true;
    spec.stop_on_no_return = true;
    spec.stop_on_escape = true;
    const PhaseTrajectory traj = integrate_phase(params, start, start.eta + opt.eta_budget, spec);

    out.stop = traj.stop;
    out.evidence = traj.events;
    out.eta_end = traj.eta_end();
    out.final_state = traj.samples.back().q;
    out.min_line_distance = std::numeric_limits<double>::infinity();
    for (const auto& s : traj.samples) {
        const double dist = distance_to_q3_line(params, s.q);
        if (dist < out.min_line_distance) {
            out.min_line_distance = dist;
            out.closest = s;
        }
    }

    const Derived d = derive_constants(params);
    switch (traj.stop) {
        case StopReason::NoReturn:
        case StopReason::NearQ5Escape: {
            const Event* cross = traj.first(EventKind::CrossPlaneYQ3, -1);
            if (cross && cross->state.z < d.Z0) {
                out.cls = ShootingClass::SetC_Vanishing;
                out.decided_at_eta = cross->eta;
            } else {
                out.diagnostics = "escape without a recorded no-return crossing";
            }
            break;
        }
        case StopReason::EnterR0:
            out.cls = ShootingClass::SetA_MinGrowth;
            out.decided_at_eta = traj.eta_end();
            break;
        case StopReason::EtaMax:
            if (distance_to_q3_line(params, out.final_state) < spec.tol_q3) {
                out.cls = ShootingClass::Boundary_TailDecay;
                out.decided_at_eta = traj.eta_end();
            } else {
                out.diagnostics = "eta budget exhausted";
            }
            break;
        default: {
            std::ostringstream os;
            os << "integration stopped: " << to_string(traj.stop) << " at eta = " << traj.eta_end();
            out.diagnostics = os.str();
            break;
        }
    }
    return out;
}

ShootingClass classify_by_profile(const Params& params, double A, const ProfileOptions& opt) {
    const ProfileSolution sol = integrate_profile(params, A, 1e8 * profile_scale(params, A), opt);
    if (std::holds_alternative<HitZero>(sol.terminal)) return ShootingClass::SetC_Vanishing;
    if (std::holds_alternative<MinThenGrowth>(sol.terminal) ||
        std::holds_alternative<SuspectedBlowUp>(sol.terminal))
        return ShootingClass::SetA_MinGrowth;
    return ShootingClass::Undecided;
}

std::pair<double, double> seed_bracket(const Params& params, const ClassifyOptions& opt,
                                       int max_steps) {
    double A = 1.0;
    ShootingClass c = classify(params, A, opt).cls;
    const double factor = (c == ShootingClass::SetC_Vanishing) ? 0.25 : 4.0;
    for (int i = 0; i < max_steps; ++i) {
        const double next = A * factor;
        const ShootingClass cn = classify(params, next, opt).cls;
        if (c == ShootingClass::SetA_MinGrowth && cn == ShootingClass::SetC_Vanishing)
            return {A, next};
        if (c == ShootingClass::SetC_Vanishing && cn == ShootingClass::SetA_MinGrowth)
            return {next, A};
        A = next;
        c = cn;
    }
    throw Error(ErrorCode::BadBracket, "no class transition found while scanning A by factors of 4");
}

std::optional<TailFit> natural_tail_window(const ProfileSolution& sol, double target, double rel,
                                           int n) {
    const double lo = std::log(sol.xi_begin()), hi = std::log(sol.xi_end());
    if (!(hi > lo)) return std::nullopt;
    std::vector<double> lx(n), slope(n);
    for (int i = 0; i < n; ++i) {
        lx[i] = lo + (hi - lo) * i / (n - 1);
        const auto s = sol.at(std::clamp(std::exp(lx[i]), sol.xi_begin(), sol.xi_end()));
        slope[i] = s.f > 0.0 ? -std::exp(lx[i]) * s.fprime / s.f : 0.0;
    }
    int best_a = -1, best_b = -1;
    for (int i = 0; i < n;) {
        if (std::abs(slope[i] - target) > rel * target) {
            ++i;
            continue;
        }
        int j = i;
        while (j + 1 < n && std::abs(slope[j + 1] - target) <= rel * target) ++j;
        if (best_a < 0 || lx[j] - lx[i] > lx[best_b] - lx[best_a]) {
            best_a = i;
            best_b = j;
        }
        i = j + 1;
    }
    if (best_a < 0 || best_b == best_a) return std::nullopt;
    const double xa = std::exp(lx[best_a]), xb = std::exp(lx[best_b]);
    try {
        return tail_power_fit(sol, xa, std::max(xb, 10.0 * xa * (1.0 + 1e-12)));
    } catch (const Error&) {
        return std::nullopt;
    }
}

BisectionResult find_A_star(const Params& params, double A_lo, double A_hi,
                            const BisectionOptions& opt) {
    if (!(A_lo > 0.0) || !(A_hi > A_lo)) throw Error(ErrorCode::BadBracket, "need 0 < A_lo < A_hi");
    BisectionResult res;

    auto eval = [&](double A) {
        ClassifyOptions co = opt.classify;
        ClassificationOutcome c = classify(params, A, co);
        ++res.evaluations;
        for (int k = 0; k < opt.max_budget_doublings && c.cls == ShootingClass::Undecided; ++k) {
            co.eta_budget *= 2.0;
            c = classify(params, A, co);
            ++res.evaluations;
        }
        return c;
    };

    const auto c_lo = eval(A_lo);
    const auto c_hi = eval(A_hi);
    if (c_lo.cls != ShootingClass::SetA_MinGrowth || c_hi.cls != ShootingClass::SetC_Vanishing) {
        std::ostringstream os;
        os << "endpoint classes " << to_string(c_lo.cls) << " at A_lo = " << A_lo << " and "
           << to_string(c_hi.cls) << " at A_hi = " << A_hi
           << " (expected SetA_MinGrowth below SetC_Vanishing)";
        throw Error(ErrorCode::BadBracket, os.str());
    }

    double lo = A_lo, hi = A_hi;
    while ((hi - lo) / std::sqrt(lo * hi) > opt.tol && res.iterations < opt.max_iterations) {
        const double mid = std::sqrt(lo * hi);
        if (mid <= lo || mid >= hi) break;
        const auto c = eval(mid);
        ++res.iterations;
        if (c.cls == ShootingClass::SetA_MinGrowth) {
            lo = mid;
        } else if (c.cls == ShootingClass::SetC_Vanishing) {
            hi = mid;
        } else {
            std::ostringstream os;
            os << "NonDichotomy: (" << lo << ": SetA_MinGrowth, " << mid << ": " << to_string(c.cls)
               << ", " << hi << ": SetC_Vanishing)";
            if (!c.diagnostics.empty()) os << " [" << c.diagnostics << "]";
            res.warnings.push_back(os.str());
            break;
        }
    }
    res.A_star_lo = lo;
    res.A_star_hi = hi;
    res.A_star = std::sqrt(lo * hi);
    {
        ClassifyOptions co = opt.classify;
        co.eta_budget *= 2.0;
        res.midpoint = classify(params, res.A_star, co);
    }

    ProfileOptions po;
    po.after_min = AfterMinimum::StopAtA;
    const double xs = profile_scale(params, res.A_star);
    const ProfileSolution sol = integrate_profile(params, res.A_star, std::max(1e6 * xs, 10.0 * opt.tail_hi), po);
    try {
        res.tail_fit = tail_power_fit(sol, opt.tail_lo, opt.tail_hi);
    } catch (const Error& e) {
        res.tail_fit_error = e.what();
    }
    res.natural_tail = natural_tail_window(sol, derive_constants(params).q_tail, 0.01);
    return res;
}

std::vector<MinLocusRow> min_locus(const Params& params, const std::vector<double>& A_grid,
                                   const ClassifyOptions& copt, const ProfileOptions& popt) {
    std::vector<MinLocusRow> rows;
    rows.reserve(A_grid.size());
    for (double A : A_grid) {
        MinLocusRow row{A, 0.0, 0.0, 0, false, {}};
        const auto c = classify(params, A, copt);
        if (c.cls != ShootingClass::SetA_MinGrowth) {
            row.flagged = true;
            row.note = std::string("class ") + std::string(to_string(c.cls));
            rows.push_back(row);
            continue;
        }
        const auto sol = integrate_profile(params, A, 1e8 * profile_scale(params, A), popt);
        row.fprime_sign_changes = sol.fprime_sign_changes;
        if (sol.minimum) {
            row.xi_min = sol.minimum->xi_min;
            row.f_min = sol.minimum->f_min;
        } else {
            row.flagged = true;
            row.note = std::string("profile terminal ") + std::string(terminal_name(sol.terminal));
        }
        rows.push_back(row);
    }
    return rows;
}

void to_json(nlohmann::ordered_json& j, const ClassificationOutcome& c) {
    nlohmann::ordered_json ev = nlohmann::ordered_json::array();
    for (const auto& e : c.evidence) {
        nlohmann::ordered_json ej;
        to_json(ej, e);
        ev.push_back(ej);
    }
    j = nlohmann::ordered_json{
        {"A", c.A},
        {"C", c.C},
        {"class", to_string(c.cls)},
        {"decided_at_eta", c.decided_at_eta},
        {"stop", to_string(c.stop)},
        {"eta_launch", c.eta_launch},
        {"eta_end", c.eta_end},
        {"min_line_distance", c.min_line_distance},
        {"closest", {{"eta", c.closest.eta}, {"x", c.closest.q.x}, {"y", c.closest.q.y}, {"z", c.closest.q.z}}},
        {"final_state", {c.final_state.x, c.final_state.y, c.final_state.z}},
        {"evidence", ev},
        {"diagnostics", c.diagnostics},
    };
}

void to_json(nlohmann::ordered_json& j, const TailFit& t) {
    j = nlohmann::ordered_json{{"q_est", t.q_est}, {"residual", t.residual}, {"xi_lo", t.xi_lo},
                               {"xi_hi", t.xi_hi},  {"n", t.n},               {"accepted", t.accepted}};
}

void to_json(nlohmann::ordered_json& j, const BisectionResult& b) {
    nlohmann::ordered_json o{
        {"A_star_lo", b.A_star_lo}, {"A_star_hi", b.A_star_hi}, {"A_star", b.A_star},
        {"relative_width", (b.A_star_hi - b.A_star_lo) / b.A_star},
        {"iterations", b.iterations}, {"evaluations", b.evaluations},
    };
    if (b.tail_fit) {
        nlohmann::ordered_json t;
        to_json(t, *b.tail_fit);
        o["tail_fit"] = t;
    } else {
        o["tail_fit"] = nullptr;
        o["tail_fit_error"] = b.tail_fit_error;
    }
    if (b.natural_tail) {
        nlohmann::ordered_json t;
        to_json(t, *b.natural_tail);
        o["natural_tail"] = t;
    } else {
        o["natural_tail"] = nullptr;
    }
    nlohmann::ordered_json mid;
    to_json(mid, b.midpoint);
    o["midpoint"] = mid;
    o["warnings"] = b.warnings;
    j = o;
}

}  // namespace fdx
