#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "fdx/audit.hpp"
#include "fdx/model.hpp"
#include "fdx/profile.hpp"

namespace fdx {

struct IcConstant {
    double K = 1.0;
};

/// Piecewise-linear u0 through (r, u) pairs, held constant outside the table.
struct IcRadialTable {
    std::vector<double> r;
    std::vector<double> u;
};

/// u0(r) = amplitude · r^{−exponent}; needs r > 0 everywhere (annulus mode).
struct IcPowerTail {
    double amplitude = 1.0;
    double exponent = 1.0;
};

using InitialCondition = std::variant<IcConstant, IcRadialTable, IcPowerTail>;

enum class OuterBc { Dirichlet0, ExactStationary };

struct DtControl {
    double dt0 = 1e-6;
    double dt_min = 1e-40;
    double dt_max = 1.0;
    double target = 1e-3;  // step-doubling error estimate / sup u
    double reject = 1.5;   // steps with error above reject·target are redone
};

struct PdeConfig {
    std::optional<Params> params;
    double R = 50.0;
    int n = 512;
    double r_inner = 0.0;  // > 0: annulus [r_inner, R] with exact stationary data at r_inner
    DtControl dt{};
    InitialCondition ic = IcConstant{};
    OuterBc bc_outer = OuterBc::Dirichlet0;
    bool diffusion = true;
    bool absorption = true;
    double newton_tol = 1e-11;
    int newton_max = 40;
};

/// Throws BadConfig on R ≤ 0, n < 16 (unless diffusion is off), bad ICs or a
/// PowerTail touching r = 0.
void validate_config(const PdeConfig& cfg);

/// Node-centred radial grid r_i = r_inner + i·h, i = 0..n, with dual control
/// volumes. Unknowns are nodes [first, n−1]; node n (and node 0 in annulus
/// mode) carry Dirichlet data.
struct RadialGrid {
    std::vector<double> r;
    std::vector<double> vol;        // |cell| / |S^{N−1}|
    std::vector<double> face_coef;  // r_{i+1/2}^{N−1} / h, size n
    std::vector<double> weight;     // r_i^σ
    int first = 0;
    double h = 0.0;
};

RadialGrid make_grid(const PdeConfig& cfg);

struct PdeState {
    double t = 0.0;
    std::vector<double> u;  // nodes 0..n, boundary nodes included
};

PdeState initial_state(const PdeConfig& cfg, const RadialGrid& grid);

/// Exact stationary solution C0·r^{−(σ+2)/(p−m)}.
double stationary_solution(const Params& params, double r);

struct StepStats {
    int newton_iterations = 0;
};

/// One backward-Euler step in w = u^m with implicit absorption, damped Newton on
/// the tridiagonal system. Throws NewtonDivergence.
PdeState step(const PdeConfig& cfg, const RadialGrid& grid, const PdeState& state, double dt,
              StepStats* stats = nullptr);

struct TracePoint {
    double t;
    double sup;
    double mass;
};

struct RateFit {
    double alpha_est = 0.0;
    double alpha_lo = 0.0;  // ±2 standard errors
    double alpha_hi = 0.0;
    double t_from = 0.0;
    double t_to = 0.0;
    double decades = 0.0;   // span of log10(T_est − t) in the window
    double residual = 0.0;
    double C1_min = 0.0;    // min over the window of sup/(T_est − t)^α_theory
    int n = 0;
};

struct ExtinctionReport {
    double T_est = 0.0;
    double T_last = 0.0;  // time of the last accepted step
    std::vector<double> crossing_times;   // sup crossing 100·tol, 10·tol, tol
    std::vector<TracePoint> trace;
    std::optional<RateFit> fit;
    int n = 0;
    long steps = 0;
    long rejected = 0;
    long newton_failures = 0;
    bool extinguished = false;
    bool sup_monotone = true;
    bool radial_monotone = true;
    bool nonnegative = true;
    std::string stop_reason;
    // rerun at n/2
    std::optional<double> T_coarse;
    std::optional<double> alpha_coarse;
    int n_coarse = 0;
};

struct RunOptions {
    double t_max = 1e6;
    long max_steps = 2'000'000;
    bool refine = true;
    double window_frac = 0.5;
    std::vector<double> snapshot_times;
    std::function<void(const PdeState&)> observer;  // called on every accepted state
    std::function<void(double t, const std::vector<double>& r, const std::vector<double>& u)> on_snapshot;
};

/// Advances until sup u < tol_u. T_est from Aitken extrapolation of the
/// crossing times of 100·tol_u, 10·tol_u and tol_u.
ExtinctionReport run_until_extinction(const PdeConfig& cfg, double tol_u, const RunOptions& opt = {});

/// Least-squares slope of ln sup against ln(T_est − t) over the final
/// window_frac of the logarithmic decay. Throws WindowTooShort below one decade.
RateFit fit_extinction_rate(const ExtinctionReport& report, double window_frac,
                            double alpha_theory = 0.0);

struct RadiusChoice {
    double R = 0.0;
    std::vector<double> radii;
    std::vector<double> T_est;
    bool converged = false;
};

/// Doubles R (and n, keeping h) from cfg.R until T_est moves by less than rel.
RadiusChoice choose_outer_radius(const PdeConfig& cfg, double tol_u, double rel = 0.01,
                                 int max_doublings = 4);

struct SupersolutionSetup {
    double A;
    double T;
    double f_min;
    double xi_min;
};

/// Checks u ≤ min{(T−t)^α f(r(T−t)^β; A), 2AT^α} at every node of every accepted
/// step. T ≤ 0 picks T = 1.05·(‖u0‖/f(ξ0(A);A))^{1/α}.
AuditReport supersolution_audit(const PdeConfig& cfg, double A, double T = 0.0,
                                double tol_u_rel = 1e-8, SupersolutionSetup* setup = nullptr);

/// Sign changes of u − U_{A,T}(·,t) along the grid (zero crossings of the difference).
int count_intersections(const PdeConfig& cfg, const RadialGrid& grid, const PdeState& s,
                        const ProfileSolution& profile, double T);

/// ‖u(t_end) − u(0)‖∞ / t_end for the stationary annulus run (20 equal steps).
double stationary_drift_rate(const PdeConfig& cfg, double t_end);

nlohmann::ordered_json to_json(const ExtinctionReport& r);
nlohmann::ordered_json to_json(const RateFit& f);

}  // namespace fdx
