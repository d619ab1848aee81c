#include <cmath>
#include <fstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "fdx/classifier.hpp"
#include "fdx/error.hpp"

using namespace fdx;

namespace {

const Params P0 = validate_params(0.5, 2, 3, 4.5);
const Params P1 = validate_params(0.5, 2, 1, 12);

nlohmann::json golden(const std::string& name) {
    std::ifstream in(std::string(FDX_GOLDEN_DIR) + "/" + name);
    return nlohmann::json::parse(in);
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST(Classify, FarFromCriticalValue) {
    EXPECT_EQ(classify(P0, 1e-25).cls, ShootingClass::SetA_MinGrowth);
    EXPECT_EQ(classify(P0, 1e-15).cls, ShootingClass::SetC_Vanishing);
    EXPECT_EQ(classify(P0, 1.0).cls, ShootingClass::SetC_Vanishing);
}

TEST(Classify, AgreesWithProfileShooting) {
    for (double A : {1e-24, 1e-22, 1e-20, 1e-17}) {
        EXPECT_EQ(classify(P0, A).cls, classify_by_profile(P0, A)) << A;
    }
}

TEST(Classify, VanishingEvidenceIsDownwardCrossingBelowZ0) {
    const auto o = classify(P0, 1e-19);
    ASSERT_EQ(o.cls, ShootingClass::SetC_Vanishing);
    ASSERT_FALSE(o.evidence.empty());
    const Event& e = o.evidence.back();
    EXPECT_EQ(e.kind, EventKind::CrossPlaneYQ3);
    EXPECT_EQ(e.direction, -1);
    EXPECT_LT(e.state.z, derive_constants(P0).Z0);
}

TEST(SeedBracket, StraddlesTheCriticalValue) {
    const auto [lo, hi] = seed_bracket(P0);
    EXPECT_LT(lo, hi);
    EXPECT_EQ(classify(P0, lo).cls, ShootingClass::SetA_MinGrowth);
    EXPECT_EQ(classify(P0, hi).cls, ShootingClass::SetC_Vanishing);
}

TEST(FindAStar, BadBracketRejected) {
    try {
        find_A_star(P0, 1e-15, 1e-14);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::BadBracket);
    }
}

TEST(FindAStar, RegressionAgainstGolden) {
    for (const char* name : {"P0", "P1"}) {
        const auto g = golden("astar.json")[name];
        const Params& P = std::string(name) == "P0" ? P0 : P1;
        const auto [lo, hi] = seed_bracket(P);
        const BisectionResult b = find_A_star(P, lo, hi);
        EXPECT_LE((b.A_star_hi - b.A_star_lo) / b.A_star_lo, 1e-10);
        EXPECT_LE(rel(b.A_star, g["A_star"].get<double>()), g["tolerance_rel"].get<double>()) << name;
        EXPECT_TRUE(b.warnings.empty());
    }
}

TEST(FindAStar, FirstOrderLaunchReproducesScipyOracle) {
    ClassifyOptions co;
    co.order = LaunchOrder::First;
    co.x0 = 1e-8;
    BisectionOptions bo;
    bo.classify = co;
    bo.tol = 1e-12;
    for (const char* name : {"P0", "P1"}) {
        const Params& P = std::string(name) == "P0" ? P0 : P1;
        const auto [lo, hi] = seed_bracket(P, co);
        const BisectionResult b = find_A_star(P, lo, hi, bo);
        const double orc = golden("oracle.json")[name]["A_star_first_order"].get<double>();
        EXPECT_LT(rel(b.A_star, orc), 1e-9) << name;
    }
}

TEST(FindAStar, StableUnderToleranceRefinement) {
    BisectionOptions a, b;
    b.classify.events.rtol = 1e-14;
    const auto [lo, hi] = seed_bracket(P0);
    const double x = find_A_star(P0, lo, hi, a).A_star;
    const double y = find_A_star(P0, lo, hi, b).A_star;
    EXPECT_LT(rel(x, y), 2e-10);
}

TEST(FindAStar, MidpointApproachesStationaryLine) {
    const auto [lo, hi] = seed_bracket(P0);
    const BisectionResult b = find_A_star(P0, lo, hi);
    EXPECT_LT(b.midpoint.min_line_distance, 1e-3);
    ASSERT_TRUE(b.natural_tail.has_value());
    EXPECT_NEAR(b.natural_tail->q_est, 13.0 / 3.0, 0.01 * 13.0 / 3.0);
    // the literal [10, 100] window is not reached by the tail at these parameters
    EXPECT_FALSE(b.tail_fit.has_value());
    EXPECT_FALSE(b.tail_fit_error.empty());
}

TEST(MinLocus, RowsBelowCriticalValueHaveAMinimum) {
    const auto rows = min_locus(P0, {1e-24, 1e-23, 1e-22});
    ASSERT_EQ(rows.size(), 3u);
    for (const auto& r : rows) {
        EXPECT_GT(r.f_min, 0);
        EXPECT_LT(r.f_min, r.A);
        EXPECT_EQ(r.fprime_sign_changes, 1);
    }
}
