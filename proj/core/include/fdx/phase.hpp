#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "fdx/model.hpp"
#include "fdx/ode.hpp"

namespace fdx {

/// Point of the autonomous system together with its independent variable η = ln ξ.
struct PhaseState {
    double eta = 0.0;
    PhasePoint q;
};

struct ProfilePoint {
    double xi = 0.0;
    double f = 0.0;
    double fprime = 0.0;
};

/// x = (α/m)ξ²f^{1−m}, y = ξf′/f, z = ξ^{σ+2}f^{p−m}/m. Throws NonpositiveProfile for f ≤ 0.
PhaseState profile_to_phase(const Params& params, double xi, double f, double fprime);

/// Inverse of profile_to_phase using x and y; z is redundant. Throws ZeroX for x ≤ 0.
ProfilePoint phase_to_profile(const Params& params, double eta, const PhasePoint& q);

enum class LaunchOrder { First, Second };

/// Point on the unstable manifold of Q1 leaving along l_C, parametrised by x0.
///
/// First:  (x0, −x0/N, C x0^{(σ+2)/2}).
/// Second: adds the x0² and z terms of y and the x0 correction of z, so the
///         launch error is O(x0³) in y and O(x0²) relative in z.
PhasePoint launch_lC(const Params& params, double C, double x0,
                     LaunchOrder order = LaunchOrder::First);

/// Start of l_∞ in the invariant plane x = 0, along e3 = (0, 1, N+σ).
PhasePoint launch_l_inf(const Params& params, double z0);

/// η at which l_C, launched at x0 and matching the profile f(·;A), sits.
double launch_eta(const Params& params, double A, double x0,
                  LaunchOrder order = LaunchOrder::Second);

/// Log-space evaluation of the C ↔ A correspondence between l_C and f(·;A).
double bij_C_to_A(const Params& params, double C);
double bij_A_to_C(const Params& params, double A);
double log_bij_C_to_A(const Params& params, double log_C);
double log_bij_A_to_C(const Params& params, double log_A);

enum class EventKind {
    CrossPlaneYQ3,
    CrossPlaneY0,
    CrossZ0,
    EnterR,
    EnterR0,
    NearQ3,
    NearQ5Escape,
    StepFailure,
};

std::string_view to_string(EventKind kind) noexcept;

struct Event {
    EventKind kind;
    double eta;
    PhasePoint state;
    int direction = 0;  // +1 upward / entering, −1 downward / leaving, 0 for one-shot kinds
};

enum class StopReason { EtaMax, NearQ3, NearQ5Escape, EnterR0, NoReturn, StepFailure, Unbounded };

std::string_view to_string(StopReason reason) noexcept;

struct EventSpec {
    double tol_q3 = 1e-6;             // NearQ3 radius, (y, z)-distance to the line through Q3
    std::optional<double> y_escape;   // default −10·(σ+2)/(p−m)
    bool stop_near_q3 = false;
    bool stop_on_escape = true;
    bool stop_on_enter_r0 = false;
    bool stop_on_no_return = false;   // downward crossing of y = y_Q3 with z < Z0
    double rtol = 1e-11;
    double atol_y = 1e-14;            // x and z use pure relative control
    double bound = 1e12;              // |x|, |y| or |z| above this stops with Unbounded
    long max_steps = 1'000'000;
};

struct PhaseTrajectory {
    std::optional<Params> params;
    double C = 0.0;
    bool C_infinite = false;
    std::vector<PhaseState> samples;
    std::vector<Event> events;
    StopReason stop = StopReason::EtaMax;
    std::vector<ode::DenseStep<3>> dense;

    /// Dense-output state at η within the integrated range.
    PhasePoint at(double eta) const;
    double eta_begin() const { return samples.front().eta; }
    double eta_end() const { return samples.back().eta; }
    const Event* first(EventKind kind, int direction = 0) const;
};

PhaseTrajectory integrate_phase(const Params& params, const PhaseState& start, double eta_max,
                                const EventSpec& spec = {});

/// (y, z)-distance to the stationary line {y = y_Q3, z = Z0}.
double distance_to_q3_line(const Params& params, const PhasePoint& q);
/// Euclidean distance to Q3 = (0, y_Q3, Z0).
double distance_to_q3(const Params& params, const PhasePoint& q);

void to_json(nlohmann::ordered_json& j, const Event& e);

}  // namespace fdx
