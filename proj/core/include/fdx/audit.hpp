#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fdx/classifier.hpp"
#include "fdx/model.hpp"

namespace fdx {

struct Violation {
    std::string check;
    double eta = 0.0;
    PhasePoint state;
    double margin = 0.0;
};

struct AuditReport {
    std::string name;
    long n_samples = 0;
    long n_violations = 0;
    double worst_margin = 0.0;  // positive when every checked quantity had the predicted sign
    std::uint64_t seed = 0;
    std::vector<Violation> violations;  // capped at max_recorded
    std::vector<std::string> artifacts;
    nlohmann::ordered_json details = nlohmann::ordered_json::object();

    bool passed() const noexcept { return n_violations == 0; }
};

inline constexpr std::uint64_t kDefaultSeed = 0x5eed'f0d1'2024ULL;
inline constexpr std::size_t kMaxRecordedViolations = 256;

struct AuditOptions {
    std::uint64_t seed = kDefaultSeed;
    double box = 0.0;  // 0 selects 10·max(1, Z0)
    ClassifyOptions classify{};
    double eta_budget = 80.0;
    double tail_span = 10.0;  // extra η integrated after entering ℛ₀
};

/// Boundary flow signs of ℛ and ℛ₀ from the closed-form functionals, cross-checked
/// against vector_field·normal. n points per boundary plane.
AuditReport flow_sign_audit(const Params& params, long n, const AuditOptions& opt = {});

/// Set-𝒞 trajectories: after the downward crossing of y = y_Q3 (with z < Z0),
/// y stays below, y and z decrease, and the run ends in NearQ5Escape.
AuditReport no_return_audit(const Params& params, long n_traj, const AuditOptions& opt = {});

/// Trajectories inside ℛ with y < 0 reach ℛ₀ and stay; strip monotonicity of x;
/// growth of z/x after entry.
AuditReport region_transit_audit(const Params& params, long n_traj, const AuditOptions& opt = {});

/// l_∞ enters ℛ₀; l₀ crosses y = y_Q3, escapes to Q5 and stays below y = −(p−m)x/(σ+2).
AuditReport limit_trajectory_audit(const Params& params, double z0 = 1e-8,
                                   const AuditOptions& opt = {});

/// Sums counts, keeps the smallest margin and concatenates records.
AuditReport merge_reports(const std::string& name, const std::vector<AuditReport>& parts);

nlohmann::ordered_json to_json(const AuditReport& r);

}  // namespace fdx
