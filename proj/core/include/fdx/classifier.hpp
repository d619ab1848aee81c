#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "fdx/model.hpp"
#include "fdx/phase.hpp"
#include "fdx/profile.hpp"

namespace fdx {

enum class ShootingClass { SetC_Vanishing, SetA_MinGrowth, Boundary_TailDecay, Undecided };

std::string_view to_string(ShootingClass c) noexcept;

inline EventSpec classify_event_defaults() {
    EventSpec e;
    e.rtol = 1e-13;
    return e;
}

struct ClassifyOptions {
    double x0 = 1e-6;
    LaunchOrder order = LaunchOrder::Second;
    double eta_budget = 40.0;  // η-span after the launch point
    EventSpec events = classify_event_defaults();
};

struct ClassificationOutcome {
    double A = 0.0;
    double C = 0.0;
    ShootingClass cls = ShootingClass::Undecided;
    std::vector<Event> evidence;
    double decided_at_eta = 0.0;
    StopReason stop = StopReason::EtaMax;
    double eta_launch = 0.0;
    double eta_end = 0.0;
    double min_line_distance = 0.0;  // min over the run of the (y, z)-distance to Q3's line
    PhaseState closest;              // where that minimum is attained
    PhasePoint final_state;
    std::string diagnostics;
};

/// Shooting class of f(·;A) decided in phase space: a downward crossing of
/// y = y_Q3 with z < Z0 gives SetC_Vanishing, entry into ℛ₀ gives
/// SetA_MinGrowth. Anything else within the budget is Undecided, or
/// Boundary_TailDecay if the run ends inside the NearQ3 tube.
ClassificationOutcome classify(const Params& params, double A, const ClassifyOptions& opt = {});

/// Same question answered from the terminal event of integrate_profile.
ShootingClass classify_by_profile(const Params& params, double A, const ProfileOptions& opt = {});

struct BisectionOptions {
    double tol = 1e-10;  // relative bracket width
    int max_iterations = 200;
    int max_budget_doublings = 4;
    ClassifyOptions classify{};
    double tail_lo = 10.0;
    double tail_hi = 100.0;
};

struct BisectionResult {
    double A_star_lo = 0.0;
    double A_star_hi = 0.0;
    double A_star = 0.0;  // geometric midpoint
    int iterations = 0;
    int evaluations = 0;
    std::optional<TailFit> tail_fit;        // on [tail_lo, tail_hi]
    std::string tail_fit_error;
    std::optional<TailFit> natural_tail;    // widest window where the local slope sits within 1%
    ClassificationOutcome midpoint;
    std::vector<std::string> warnings;
};

/// Seeds a bracket by scanning from A = 1 by factors of 4 until both
/// SetA_MinGrowth and SetC_Vanishing are seen. Throws BadBracket on failure.
std::pair<double, double> seed_bracket(const Params& params, const ClassifyOptions& opt = {},
                                       int max_steps = 60);

/// Bisection in log A between a SetA_MinGrowth lower end and a SetC_Vanishing upper end.
BisectionResult find_A_star(const Params& params, double A_lo, double A_hi,
                            const BisectionOptions& opt = {});

/// Widest window (log-uniform scan) in which −d ln f/d ln ξ stays within rel of target.
std::optional<TailFit> natural_tail_window(const ProfileSolution& sol, double target, double rel,
                                           int n = 400);

struct MinLocusRow {
    double A;
    double xi_min;
    double f_min;
    int fprime_sign_changes;
    bool flagged;
    std::string note;
};

std::vector<MinLocusRow> min_locus(const Params& params, const std::vector<double>& A_grid,
                                   const ClassifyOptions& copt = {},
                                   const ProfileOptions& popt = {});

void to_json(nlohmann::ordered_json& j, const ClassificationOutcome& c);
void to_json(nlohmann::ordered_json& j, const TailFit& t);
void to_json(nlohmann::ordered_json& j, const BisectionResult& b);

}  // namespace fdx
