#include "fdx/phase.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fdx/error.hpp"

namespace fdx {

PhaseState profile_to_phase(const Params& params, double xi, double f, double fprime) {
    if (!(f > 0.0)) {
        std::ostringstream os;
        os << "profile value must be positive (f = " << f << " at xi = " << xi << ")";
        throw Error(ErrorCode::NonpositiveProfile, os.str());
    }
    if (!(xi > 0.0)) throw Error(ErrorCode::BadRange, "xi must be positive");
    const Derived d = derive_constants(params);
    const double m = params.m(), p = params.p(), s = params.sigma();
    const double lx = std::log(xi), lf = std::log(f);
    PhaseState out;
    out.eta = lx;
    out.q.x = std::exp(std::log(d.alpha / m) + 2.0 * lx + (1.0 - m) * lf);
    out.q.y = xi * fprime / f;
    out.q.z = std::exp((s + 2.0) * lx + (p - m) * lf) / m;
    return out;
}

ProfilePoint phase_to_profile(const Params& params, double eta, const PhasePoint& q) {
    if (!(q.x > 0.0)) throw Error(ErrorCode::ZeroX, "profile is not recoverable on the plane x = 0");
    const Derived d = derive_constants(params);
    const double m = params.m();
    ProfilePoint out;
    out.xi = std::exp(eta);
    out.f = std::exp((std::log(m * q.x / d.alpha) - 2.0 * eta) / (1.0 - m));
    out.fprime = q.y * out.f / out.xi;
    return out;
}

PhasePoint launch_lC(const Params& params, double C, double x0, LaunchOrder order) {
    const double m = params.m(), p = params.p(), s = params.sigma();
    const double N = params.N();
    const double q = 0.5 * (s + 2.0);
    PhasePoint out;
    out.x = x0;
    out.z = C > 0.0 ? std::exp(std::log(C) + q * std::log(x0)) : 0.0;
    out.y = -x0 / N;
    if (order == LaunchOrder::Second) {
        const double kappa = (p - m) / (s + 2.0);
        const double a = (kappa * N - 1.0) / (N * N * (N + 2.0));
        const double kz = (q * (1.0 - m) - (p - m)) / (2.0 * N);
        out.z *= 1.0 + kz * x0;
        out.y += a * x0 * x0 + out.z / (N + s);
    }
    return out;
}

PhasePoint launch_l_inf(const Params& params, double z0) {
    return {0.0, z0 / (params.N() + params.sigma()), z0};
}

double launch_eta(const Params& params, double A, double x0, LaunchOrder order) {
    const Derived d = derive_constants(params);
    const double m = params.m();
    double s = x0;
    if (order == LaunchOrder::Second) s *= 1.0 + (1.0 - m) * x0 / (2.0 * params.N());
    return 0.5 * (std::log(s * m / d.alpha) - (1.0 - m) * std::log(A));
}

double log_bij_C_to_A(const Params& params, double log_C) {
    const Derived d = derive_constants(params);
    const double m = params.m(), s = params.sigma();
    const double e = (1.0 - m) * (d.sigma_star - s);
    return (2.0 * (log_C + std::log(m)) + (s + 2.0) * std::log(d.alpha / m)) / e;
}

double log_bij_A_to_C(const Params& params, double log_A) {
    const Derived d = derive_constants(params);
    const double m = params.m(), s = params.sigma();
    const double e = (1.0 - m) * (d.sigma_star - s);
    return 0.5 * (log_A * e - (s + 2.0) * std::log(d.alpha / m)) - std::log(m);
}

double bij_C_to_A(const Params& params, double C) {
    if (!(C > 0.0)) throw Error(ErrorCode::BadRange, "C must be positive");
    return std::exp(log_bij_C_to_A(params, std::log(C)));
}

double bij_A_to_C(const Params& params, double A) {
    if (!(A > 0.0)) throw Error(ErrorCode::BadRange, "A must be positive");
    return std::exp(log_bij_A_to_C(params, std::log(A)));
}

std::string_view to_string(EventKind kind) noexcept {
    switch (kind) {
        case EventKind::CrossPlaneYQ3: return "CrossPlaneYQ3";
        case EventKind::CrossPlaneY0: return "CrossPlaneY0";
        case EventKind::CrossZ0: return "CrossZ0";
        case EventKind::EnterR: return "EnterR";
        case EventKind::EnterR0: return "EnterR0";
        case EventKind::NearQ3: return "NearQ3";
        case EventKind::NearQ5Escape: return "NearQ5Escape";
        case EventKind::StepFailure: return "StepFailure";
    }
    return "?";
}

std::string_view to_string(StopReason reason) noexcept {
    switch (reason) {
        case StopReason::EtaMax: return "EtaMax";
        case StopReason::NearQ3: return "NearQ3";
        case StopReason::NearQ5Escape: return "NearQ5Escape";
        case StopReason::EnterR0: return "EnterR0";
        case StopReason::NoReturn: return "NoReturn";
        case StopReason::StepFailure: return "StepFailure";
        case StopReason::Unbounded: return "Unbounded";
    }
    return "?";
}

double distance_to_q3_line(const Params& params, const PhasePoint& q) {
    const Derived d = derive_constants(params);
    return std::hypot(q.y - d.y_Q3, q.z - d.Z0);
}

double distance_to_q3(const Params& params, const PhasePoint& q) {
    const Derived d = derive_constants(params);
    return std::sqrt(q.x * q.x + (q.y - d.y_Q3) * (q.y - d.y_Q3) + (q.z - d.Z0) * (q.z - d.Z0));
}

PhasePoint PhaseTrajectory::at(double eta) const {
    if (dense.empty()) return samples.front().q;
    auto it = std::upper_bound(dense.begin(), dense.end(), eta,
                               [](double e, const ode::DenseStep<3>& s) { return e < s.t0; });
    if (it != dense.begin()) --it;
    return as_point((*it)(eta));
}

const Event* PhaseTrajectory::first(EventKind kind, int direction) const {
    for (const auto& e : events)
        if (e.kind == kind && (direction == 0 || e.direction == direction)) return &e;
    return nullptr;
}

namespace {

struct Monitor {
    EventKind kind;
    std::function<double(const ode::State<3>&)> g;
    bool record_leaving;
};

}  // namespace

PhaseTrajectory integrate_phase(const Params& params, const PhaseState& start, double eta_max,
                                const EventSpec& spec) {
    if (!(eta_max > start.eta)) throw Error(ErrorCode::BadRange, "eta_max must exceed the start");
    if (start.q.x < 0.0 || start.q.z < 0.0)
        throw Error(ErrorCode::BadRange, "start must satisfy x >= 0 and z >= 0");

    const Derived d = derive_constants(params);
    const double y_escape = spec.y_escape.value_or(10.0 * d.y_Q3);
    const double yq3 = d.y_Q3, z0 = d.Z0, tol = spec.tol_q3;

    const std::vector<Monitor> monitors = {
        {EventKind::CrossPlaneYQ3, [yq3](const auto& s) { return s[1] - yq3; }, true},
        {EventKind::CrossPlaneY0, [](const auto& s) { return s[1]; }, true},
        {EventKind::CrossZ0, [z0](const auto& s) { return s[2] - z0; }, true},
        {EventKind::EnterR, [yq3, z0](const auto& s) { return std::min(s[1] - yq3, s[2] - z0); }, true},
        {EventKind::EnterR0, [](const auto& s) { return std::min(s[1], s[2] - s[0]); }, true},
        {EventKind::NearQ3,
         [yq3, z0, tol](const auto& s) { return tol - std::hypot(s[1] - yq3, s[2] - z0); }, true},
        {EventKind::NearQ5Escape, [y_escape](const auto& s) { return y_escape - s[1]; }, false},
    };

    PhaseTrajectory traj;
    traj.params = params;
    traj.samples.push_back(start);

    ode::Options<3> opt;
    opt.rtol = spec.rtol;
    opt.atol = {0.0, spec.atol_y, 0.0};
    opt.max_steps = spec.max_steps;
    opt.h_max = std::max(1e-3, 0.25 * (eta_max - start.eta));
    auto rhs = [&params](double, const ode::State<3>& s) {
        return vector_field(params, as_point(s));
    };
    auto solver = ode::make_dopri5<3>(rhs, start.eta, as_vec(start.q), opt);

    std::vector<double> g_prev(monitors.size());
    for (std::size_t k = 0; k < monitors.size(); ++k) {
        g_prev[k] = monitors[k].g(as_vec(start.q));
        const EventKind kind = monitors[k].kind;
        const bool region = kind == EventKind::EnterR || kind == EventKind::EnterR0 ||
                            kind == EventKind::NearQ3 || kind == EventKind::NearQ5Escape;
        if (region && g_prev[k] > 0.0) traj.events.push_back({kind, start.eta, start.q, +1});
    }

    auto stops_on = [&](const Event& e) -> std::optional<StopReason> {
        switch (e.kind) {
            case EventKind::NearQ5Escape:
                if (spec.stop_on_escape) return StopReason::NearQ5Escape;
                break;
            case EventKind::EnterR0:
                if (spec.stop_on_enter_r0 && e.direction > 0) return StopReason::EnterR0;
                break;
            case EventKind::NearQ3:
                if (spec.stop_near_q3 && e.direction > 0) return StopReason::NearQ3;
                break;
            case EventKind::CrossPlaneYQ3:
                if (spec.stop_on_no_return && e.direction < 0 && e.state.z < z0)
                    return StopReason::NoReturn;
                break;
            default: break;
        }
        return std::nullopt;
    };

    for (const auto& e : traj.events) {
        if (auto r = stops_on(e)) {
            traj.stop = *r;
            return traj;
        }
    }

    for (;;) {
        if (solver.t() >= eta_max) {
            traj.stop = StopReason::EtaMax;
            break;
        }
        const ode::Status st = solver.step(eta_max);
        if (st != ode::Status::Ok) {
            const auto& last = traj.samples.back();
            traj.events.push_back({EventKind::StepFailure, last.eta, last.q, 0});
            traj.stop = st == ode::Status::NonFinite ? StopReason::Unbounded : StopReason::StepFailure;
            break;
        }
        const auto& dn = solver.dense();
        traj.dense.push_back(dn);
        const ode::State<3> y1 = solver.y();

        std::vector<Event> step_events;
        for (std::size_t k = 0; k < monitors.size(); ++k) {
            const double g1 = monitors[k].g(y1);
            const bool was = g_prev[k] > 0.0, now = g1 > 0.0;
            if (was != now && (now || monitors[k].record_leaving)) {
                const auto& g = monitors[k].g;
                const double te = ode::locate_root<3>(
                    dn, [&g](double, const ode::State<3>& s) { return g(s); }, dn.t0, dn.t1(),
                    g_prev[k]);
                step_events.push_back({monitors[k].kind, te, as_point(dn(te)), now ? +1 : -1});
            }
            g_prev[k] = g1;
        }
        std::stable_sort(step_events.begin(), step_events.end(),
                         [](const Event& a, const Event& b) { return a.eta < b.eta; });

        std::optional<StopReason> stop;
        for (const auto& e : step_events) {
            traj.events.push_back(e);
            if ((stop = stops_on(e))) break;
        }
        if (stop) {
            traj.samples.push_back({traj.events.back().eta, traj.events.back().state});
            traj.stop = *stop;
            break;
        }
        traj.samples.push_back({solver.t(), as_point(y1)});
        if (std::abs(y1[0]) > spec.bound || std::abs(y1[1]) > spec.bound ||
            std::abs(y1[2]) > spec.bound) {
            traj.stop = StopReason::Unbounded;
            break;
        }
    }
    return traj;
}

void to_json(nlohmann::ordered_json& j, const Event& e) {
    j = nlohmann::ordered_json{
        {"kind", to_string(e.kind)},
        {"eta", e.eta},
        {"x", e.state.x},
        {"y", e.state.y},
        {"z", e.state.z},
        {"direction", e.direction},
    };
}

}  // namespace fdx
