#pragma once

#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "fdx/model.hpp"
#include "fdx/ode.hpp"

namespace fdx {

struct HitZero {
    double xi0;       // extrapolated zero of f
    double slope_fm;  // limiting (f^m)′ at xi0, negative
};

struct MinThenGrowth {
    double xi_min;
    double f_min;
};

struct ReachedXiMax {};

struct SuspectedBlowUp {
    double xi1_est;
};

/// Step size underflow with no terminal criterion met; the solution is partial.
struct StiffnessFailure {
    double xi;
};

using TerminalEvent = std::variant<HitZero, MinThenGrowth, ReachedXiMax, SuspectedBlowUp, StiffnessFailure>;

std::string_view terminal_name(const TerminalEvent& t) noexcept;

enum class AfterMinimum {
    StopAtA,         // stop once f climbs back to f(0) = A
    ContinueGrowth,  // keep going until f_ceil, xi_max or a step failure
};

struct ProfileOptions {
    double rtol = 1e-10;
    double atol = 1e-12;       // scaled by A for f and by A/ξ_s for f′
    double xi_init = 0.0;      // 0 selects 1e-3·ξ_s, ξ_s = sqrt(m/(α A^{1−m}))
    double f_floor_rel = 1e-10;
    double f_ceil_rel = 1e8;
    AfterMinimum after_min = AfterMinimum::StopAtA;
    long max_steps = 2'000'000;
};

struct ProfileSample {
    double xi;
    double f;
    double fprime;
};

struct ProfileSolution {
    double A = 0.0;
    std::vector<ProfileSample> samples;
    TerminalEvent terminal = ReachedXiMax{};
    std::optional<MinThenGrowth> minimum;  // first interior zero of f′, if any
    int fprime_sign_changes = 0;
    std::vector<ode::DenseStep<2>> dense;

    double xi_begin() const { return samples.front().xi; }
    double xi_end() const { return samples.back().xi; }
    /// Dense-output (f, f′) within the integrated range.
    ProfileSample at(double xi) const;
};

/// Natural length scale sqrt(m/(α A^{1−m})) of f(·;A) near the origin.
double profile_scale(const Params& params, double A);

/// Second-order start: f ≈ A − αA^{2−m}ξ²/(2mN), f′ ≈ −αA^{2−m}ξ/(mN).
ProfileSample series_start(const Params& params, double A, double xi_init);

/// Right-hand side f″ of the profile equation written for (f, g = f′).
double profile_second_derivative(const Params& params, double xi, double f, double fprime);

/// (f^m)″ + (N−1)(f^m)′/ξ + αf + βξf′ − ξ^σ f^p for given f, f′, f″.
double profile_residual(const Params& params, double xi, double f, double fprime, double fsecond);

ProfileSolution integrate_profile(const Params& params, double A, double xi_max,
                                  const ProfileOptions& options = {});

struct TailFit {
    double q_est;
    double residual;  // RMS deviation of ln f from the fitted line
    double xi_lo;
    double xi_hi;
    int n;
    bool accepted;
};

/// Least-squares slope of −ln f against ln ξ on log-uniform samples of the
/// dense output. Throws WindowTooShort if the usable window spans < 1 decade.
TailFit tail_power_fit(const ProfileSolution& sol, double xi_lo, double xi_hi,
                       double residual_threshold = 0.02, int n = 200);

struct VanishSlope {
    double xi0;
    double slope_fm;
    double slope_predicted;
    double rel_error;
    double local_exponent;  // fitted b in f ≈ K(ξ0−ξ)^b
    double local_prefactor; // fitted K
};

/// Compares the extrapolated (f^m)′(ξ0) with −m(α/m)^{m/(m−1)} ξ0^{(m+1)/(m−1)}.
/// Throws WrongTerminal unless the solution ended with HitZero.
VanishSlope vanish_slope_check(const Params& params, const ProfileSolution& sol);

struct BlowUpFit {
    double q_blow;
    double xi1;
    double residual;
    double candidate_large;  // 2/(p−m), for m+p ≥ 2
    double candidate_small;  // 1/(p−1), for m+p < 2
    int n;
};

/// Fits f ~ K(ξ1−ξ)^{−q} via the linear law f/f′ = (ξ1−ξ)/q on the
/// steepest part of the growth. Exploratory, no verdict.
BlowUpFit blowup_exponent_fit(const Params& params, const ProfileSolution& sol);

void to_json(nlohmann::ordered_json& j, const TerminalEvent& t);

}  // namespace fdx
