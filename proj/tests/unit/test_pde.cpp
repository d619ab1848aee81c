#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fdx/error.hpp"
#include "fdx/pde.hpp"

using namespace fdx;

namespace {

const Params P1 = validate_params(0.5, 2, 1, 12);
const Params P0 = validate_params(0.5, 2, 3, 4.5);

PdeConfig base(int n = 128, double R = 10.0) {
    PdeConfig c;
    c.params = P1;
    c.n = n;
    c.R = R;
    return c;
}

ErrorCode config_error(const PdeConfig& c) {
    try {
        validate_config(c);
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Io;
}

}  // namespace

TEST(PdeConfig, Validation) {
    auto c = base();
    c.R = -1;
    EXPECT_EQ(config_error(c), ErrorCode::BadConfig);
    c = base(8);
    EXPECT_EQ(config_error(c), ErrorCode::BadConfig);
    c = base();
    c.ic = IcConstant{0.0};
    EXPECT_EQ(config_error(c), ErrorCode::BadConfig);
    c = base();
    c.ic = IcPowerTail{1.0, 2.0};
    EXPECT_EQ(config_error(c), ErrorCode::BadConfig);
    c = base();
    c.params.reset();
    EXPECT_EQ(config_error(c), ErrorCode::BadConfig);
    EXPECT_EQ(config_error(base()), ErrorCode::Io);  // valid
}

TEST(PdeGrid, VolumesSumToBall) {
    for (int N : {1, 3}) {
        PdeConfig c = base(64, 2.0);
        c.params = N == 1 ? P1 : P0;
        const RadialGrid g = make_grid(c);
        double v = 0;
        for (double x : g.vol) v += x;
        EXPECT_NEAR(v, std::pow(2.0, N) / N, 1e-12);
    }
}

TEST(PdeStep, NoFluxNoWeightLeavesOriginUnchanged) {
    PdeConfig c = base(1, 1.0);
    c.diffusion = false;
    c.ic = IcConstant{1.0};
    const RadialGrid g = make_grid(c);
    PdeState s = initial_state(c, g);
    for (int k = 0; k < 5; ++k) s = step(c, g, s, 0.1);
    EXPECT_DOUBLE_EQ(s.u[0], 1.0);
}

TEST(PdeStep, PureAbsorptionMatchesImplicitEuler) {
    PdeConfig c = base(16, 2.0);
    c.diffusion = false;
    c.ic = IcConstant{1.0};
    const RadialGrid g = make_grid(c);
    const PdeState s = step(c, g, initial_state(c, g), 0.01);
    for (int i = 0; i < c.n; ++i) {
        const double a = 0.01 * std::pow(g.r[i], 12.0);
        const double u = 2.0 / (1.0 + std::sqrt(1.0 + 4.0 * a));
        EXPECT_NEAR(s.u[i], u, 1e-10 * std::max(u, 1e-6));
    }
}

TEST(PdeStep, RejectsNonPositiveDt) {
    const PdeConfig c = base();
    const RadialGrid g = make_grid(c);
    EXPECT_THROW(step(c, g, initial_state(c, g), 0.0), Error);
}

TEST(PdeStep, ZeroStaysZero) {
    PdeConfig c = base();
    c.ic = IcRadialTable{{0.0, 10.0}, {0.0, 0.0}};
    const RadialGrid g = make_grid(c);
    PdeState s = initial_state(c, g);
    for (int k = 0; k < 3; ++k) s = step(c, g, s, 0.1);
    for (double v : s.u) EXPECT_EQ(v, 0.0);
}

TEST(PdeStep, ComparisonPrinciple) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    PdeConfig c = base(64, 4.0);
    for (int pair = 0; pair < 10; ++pair) {
        std::vector<double> r, lo, hi;
        for (int k = 0; k <= 8; ++k) {
            r.push_back(0.5 * k);
            const double a = 0.1 + U(rng), b = a + U(rng);
            lo.push_back(a);
            hi.push_back(b);
        }
        PdeConfig cl = c, ch = c;
        cl.ic = IcRadialTable{r, lo};
        ch.ic = IcRadialTable{r, hi};
        const RadialGrid g = make_grid(c);
        PdeState sl = initial_state(cl, g), sh = initial_state(ch, g);
        for (double dt : {1e-4, 1e-3, 1e-2, 3e-2}) {
            sl = step(cl, g, sl, dt);
            sh = step(ch, g, sh, dt);
            for (std::size_t i = 0; i < sl.u.size(); ++i) ASSERT_LE(sl.u[i], sh.u[i] + 1e-12) << pair;
        }
    }
}

TEST(PdeStationary, DriftIsSecondOrder) {
    const Derived d = derive_constants(P1);
    auto drift = [&](int n) {
        PdeConfig c;
        c.params = P1;
        c.r_inner = 1.0;
        c.R = 2.0;
        c.n = n;
        c.bc_outer = OuterBc::ExactStationary;
        c.ic = IcPowerTail{d.C0, d.q_tail};
        return stationary_drift_rate(c, 1e-3);
    };
    const double a = drift(64), b = drift(128);
    EXPECT_GE(a / b, 3.5);
}

TEST(PdeRate, SyntheticPowerLaw) {
    ExtinctionReport r;
    r.T_est = 1.0;
    for (int k = 0; k < 400; ++k) {
        const double tau = std::pow(10.0, -3.0 * k / 399.0);
        r.trace.push_back({1.0 - tau, std::pow(tau, 3.5), 0.0});
    }
    const RateFit f = fit_extinction_rate(r, 1.0, 3.5);
    EXPECT_NEAR(f.alpha_est, 3.5, 1e-6);
    EXPECT_NEAR(f.C1_min, 1.0, 1e-9);
    EXPECT_GE(f.decades, 2.9);
}

TEST(PdeRate, ShortWindowRejected) {
    ExtinctionReport r;
    r.T_est = 1.0;
    for (int k = 0; k < 10; ++k) r.trace.push_back({0.5 + 0.01 * k, 1.0 - 0.05 * k, 0.0});
    try {
        fit_extinction_rate(r, 1.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::WindowTooShort);
    }
}

TEST(PdeRun, ExtinctionAtModestResolution) {
    PdeConfig c = base(256, 20.0);
    const ExtinctionReport r = run_until_extinction(c, 1e-8);
    ASSERT_TRUE(r.extinguished);
    EXPECT_TRUE(std::isfinite(r.T_est));
    EXPECT_TRUE(r.sup_monotone);
    EXPECT_TRUE(r.radial_monotone);
    EXPECT_TRUE(r.nonnegative);
    ASSERT_TRUE(r.T_coarse.has_value());
    EXPECT_LT(std::abs(r.T_est - *r.T_coarse) / r.T_est, 0.02);
    ASSERT_TRUE(r.fit.has_value());
    EXPECT_NEAR(r.fit->alpha_est, 3.5, 0.7);
    ASSERT_EQ(r.crossing_times.size(), 3u);
    EXPECT_LE(r.crossing_times[2], r.T_est);
}

TEST(PdeRun, Snapshots) {
    PdeConfig c = base(64, 10.0);
    RunOptions o;
    o.refine = false;
    std::vector<double> times;
    o.snapshot_times = {0.0, 1.0, 2.0};
    o.on_snapshot = [&](double t, const std::vector<double>&, const std::vector<double>&) { times.push_back(t); };
    run_until_extinction(c, 1e-6, o);
    ASSERT_EQ(times.size(), 3u);
    EXPECT_NEAR(times[1], 1.0, 1e-9);
    EXPECT_NEAR(times[2], 2.0, 1e-9);
}

TEST(Supersolution, HoldsForConstantData) {
    PdeConfig c = base(256, 20.0);
    SupersolutionSetup su{};
    const AuditReport a = supersolution_audit(c, 0.005, 0.0, 1e-8, &su);
    EXPECT_TRUE(a.passed());
    EXPECT_GT(std::pow(su.T, 3.5) * su.f_min, 1.0);
}

TEST(Supersolution, RejectsVanishingProfile) {
    PdeConfig c = base(64, 10.0);
    try {
        supersolution_audit(c, 1.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::PreconditionViolated);
    }
}

TEST(Supersolution, RejectsTooShortT) {
    PdeConfig c = base(64, 10.0);
    try {
        supersolution_audit(c, 0.005, 0.1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::PreconditionViolated);
    }
}

TEST(Intersections, CountsSignChanges) {
    PdeConfig c = base(64, 10.0);
    const RadialGrid g = make_grid(c);
    ProfileOptions po;
    po.after_min = AfterMinimum::ContinueGrowth;
    const ProfileSolution prof = integrate_profile(P1, 0.005, 1e3, po);
    PdeState s = initial_state(c, g);
    EXPECT_GE(count_intersections(c, g, s, prof, 8.0), 0);
    EXPECT_EQ(count_intersections(c, g, s, prof, 0.0), 0);
}
