#include "fdx/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fdx/error.hpp"

namespace fdx {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::BelowCritical: return "BelowCritical";
        case ErrorCode::NotFast: return "NotFast";
        case ErrorCode::WeakAbsorption: return "WeakAbsorption";
        case ErrorCode::SigmaTooSmall: return "SigmaTooSmall";
        case ErrorCode::BadDimension: return "BadDimension";
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::DegenerateDimension: return "DegenerateDimension";
        case ErrorCode::NonpositiveProfile: return "NonpositiveProfile";
        case ErrorCode::ZeroX: return "ZeroX";
        case ErrorCode::BadRange: return "BadRange";
        case ErrorCode::WindowTooShort: return "WindowTooShort";
        case ErrorCode::WrongTerminal: return "WrongTerminal";
        case ErrorCode::BadBracket: return "BadBracket";
        case ErrorCode::BadConfig: return "BadConfig";
        case ErrorCode::NewtonDivergence: return "NewtonDivergence";
        case ErrorCode::MinDtUnderflow: return "MinDtUnderflow";
        case ErrorCode::ProfileRangeExceeded: return "ProfileRangeExceeded";
        case ErrorCode::PreconditionViolated: return "PreconditionViolated";
        case ErrorCode::Io: return "Io";
        case ErrorCode::Config: return "Config";
    }
    return "Unknown";
}

double critical_m(int N) noexcept {
    return std::max(N - 2, 0) / static_cast<double>(N);
}

Params validate_params(double m, double p, double N, double sigma) {
    if (!std::isfinite(m) || !std::isfinite(p) || !std::isfinite(N) || !std::isfinite(sigma)) {
        throw Error(ErrorCode::NonFinite, "all exponents must be finite");
    }
    if (N < 1.0 || N != std::floor(N) || N > 1e6) {
        std::ostringstream os;
        os << "N must be a positive integer (got " << N << ")";
        throw Error(ErrorCode::BadDimension, os.str());
    }
    const int n = static_cast<int>(N);
    const double mc = critical_m(n);
    if (!(m > mc)) {
        std::ostringstream os;
        os << "m > m_c = (N-2)_+/N violated: m = " << m << ", m_c = " << mc;
        throw Error(ErrorCode::BelowCritical, os.str());
    }
    if (!(m < 1.0)) {
        std::ostringstream os;
        os << "m < 1 violated: m = " << m;
        throw Error(ErrorCode::NotFast, os.str());
    }
    if (!(p > 1.0)) {
        std::ostringstream os;
        os << "p > 1 violated: p = " << p;
        throw Error(ErrorCode::WeakAbsorption, os.str());
    }
    const double sigma_star = 2.0 * (p - 1.0) / (1.0 - m);
    if (!(sigma > sigma_star)) {
        std::ostringstream os;
        os << "sigma > sigma* = 2(p-1)/(1-m) violated: sigma = " << sigma
           << ", sigma* = " << sigma_star;
        throw Error(ErrorCode::SigmaTooSmall, os.str());
    }
    return Params(m, p, n, sigma);
}

Derived derive_constants(const Params& params) {
    const double m = params.m(), p = params.p(), s = params.sigma();
    const int N = params.N();
    Derived d{};
    d.sigma_star = 2.0 * (p - 1.0) / (1.0 - m);
    const double denom = (1.0 - m) * (s - d.sigma_star);
    d.alpha = (s + 2.0) / denom;
    d.beta = (p - m) / denom;
    d.Z0 = (s + 2.0) * (m * (N + s) - p * (N - 2)) / ((p - m) * (p - m));
    d.L = std::pow(m * d.Z0, 1.0 / (p - m));
    d.C0 = d.L;
    d.q_tail = (s + 2.0) / (p - m);
    d.y_Q2 = -(N - 2) / m;
    d.y_Q3 = -d.q_tail;
    d.y_strip = -2.0 / (1.0 - m);
    return d;
}

void to_json(nlohmann::ordered_json& j, const Derived& d) {
    j = nlohmann::ordered_json{
        {"sigma_star", d.sigma_star}, {"alpha", d.alpha},   {"beta", d.beta},
        {"Z0", d.Z0},                 {"L", d.L},           {"C0", d.C0},
        {"q_tail", d.q_tail},         {"y_Q2", d.y_Q2},     {"y_Q3", d.y_Q3},
        {"y_strip", d.y_strip},
    };
}

namespace {

struct FieldConstants {
    double m, p, s, kappa, Z0, yQ3;
    int N;
};

FieldConstants field_constants(const Params& params) noexcept {
    const double m = params.m(), p = params.p(), s = params.sigma();
    const int N = params.N();
    const double Z0 = (s + 2.0) * (m * (N + s) - p * (N - 2)) / ((p - m) * (p - m));
    return {m, p, s, (p - m) / (s + 2.0), Z0, -(s + 2.0) / (p - m), N};
}

}  // namespace

Vec3 vector_field(const Params& params, const PhasePoint& q) noexcept {
    const auto c = field_constants(params);
    const double dx = q.x * (2.0 + (1.0 - c.m) * q.y);
    double dy;
    if (std::abs(q.y - c.yQ3) < std::abs(q.y)) {
        // Same polynomial regrouped around the line y = y_Q3, z = Z0, using
        // 1 + κ y = κ (y − y_Q3) and Z0 = −(N−2) y_Q3 − m y_Q3². Zero on that
        // line without cancellation.
        dy = (q.z - c.Z0) - (q.y - c.yQ3) * ((c.N - 2) + c.m * (q.y + c.yQ3) + c.kappa * q.x);
    } else {
        dy = -q.x - (c.N - 2) * q.y + q.z - c.m * q.y * q.y - c.kappa * q.x * q.y;
    }
    const double dz = q.z * (c.s + 2.0 + (c.p - c.m) * q.y);
    return {dx, dy, dz};
}

Matrix3 jacobian(const Params& params, const PhasePoint& q) noexcept {
    const auto c = field_constants(params);
    Matrix3 J{};
    J[0] = {2.0 + (1.0 - c.m) * q.y, (1.0 - c.m) * q.x, 0.0};
    J[1] = {-1.0 - c.kappa * q.y, -(c.N - 2) - 2.0 * c.m * q.y - c.kappa * q.x, 1.0};
    J[2] = {0.0, (c.p - c.m) * q.z, c.s + 2.0 + (c.p - c.m) * q.y};
    return J;
}

Matrix3 numeric_jacobian(const Params& params, const PhasePoint& q, double h) {
    if (!(h > 0.0)) throw Error(ErrorCode::BadRange, "finite-difference step must be positive");
    Matrix3 J{};
    for (std::size_t col = 0; col < 3; ++col) {
        Vec3 plus = as_vec(q), minus = as_vec(q);
        plus[col] += h;
        minus[col] -= h;
        const Vec3 fp = vector_field(params, as_point(plus));
        const Vec3 fm = vector_field(params, as_point(minus));
        for (std::size_t row = 0; row < 3; ++row) J[row][col] = (fp[row] - fm[row]) / (2.0 * h);
    }
    return J;
}

std::string_view to_string(EquilibriumLabel label) noexcept {
    switch (label) {
        case EquilibriumLabel::Q1: return "Q1";
        case EquilibriumLabel::Q2: return "Q2";
        case EquilibriumLabel::Q3: return "Q3";
    }
    return "?";
}

PhasePoint equilibrium_location(const Params& params, EquilibriumLabel label) noexcept {
    const Derived d = derive_constants(params);
    switch (label) {
        case EquilibriumLabel::Q1: return {0.0, 0.0, 0.0};
        case EquilibriumLabel::Q2: return {0.0, d.y_Q2, 0.0};
        case EquilibriumLabel::Q3: return {0.0, d.y_Q3, d.Z0};
    }
    return {};
}

namespace {

// Roots of λ² − tλ + det = 0 without subtractive cancellation.
std::array<std::complex<double>, 2> quadratic_roots(double t, double det) {
    const double disc = t * t - 4.0 * det;
    if (disc >= 0.0) {
        const double q = 0.5 * (t + std::copysign(std::sqrt(disc), t));
        if (q == 0.0) return {std::complex<double>(0.0), std::complex<double>(0.0)};
        return {std::complex<double>(q), std::complex<double>(det / q)};
    }
    const double re = 0.5 * t, im = 0.5 * std::sqrt(-disc);
    return {std::complex<double>(re, im), std::complex<double>(re, -im)};
}

}  // namespace

Equilibrium equilibrium_spectrum(const Params& params, EquilibriumLabel label) {
    const double m = params.m(), p = params.p(), s = params.sigma();
    const int N = params.N();
    const Derived d = derive_constants(params);

    Equilibrium e{};
    e.label = label;
    e.location = equilibrium_location(params, label);
    e.jacobian = jacobian(params, e.location);

    switch (label) {
        case EquilibriumLabel::Q1: {
            e.eigenvalues = {2.0, -(N - 2.0), s + 2.0};
            e.eigenvectors = {Vec3{double(N), -1.0, 0.0}, Vec3{0.0, 1.0, 0.0},
                              Vec3{0.0, 1.0, N + s}};
            break;
        }
        case EquilibriumLabel::Q2: {
            if (N <= 2) {
                throw Error(ErrorCode::DegenerateDimension,
                            "Q2 is analysed only for N >= 3 (coincides with Q1 for N = 2)");
            }
            const double a = (m * N - N + 2.0) / m;
            const double b = (p - m) * (N - 2.0) / (m * (s + 2.0)) - 1.0;
            const double c = N - 2.0;
            const double dd = (m * (N + s) - p * (N - 2.0)) / m;
            e.eigenvalues = {a, c, dd};
            e.eigenvectors[1] = {0.0, 1.0, 0.0};
            e.eigenvectors[2] = {0.0, 1.0, dd - c};
            if (std::abs(a - c) <= 1e-12 * std::max(1.0, std::abs(c))) {
                e.eigenvectors[0] = e.eigenvectors[1];
                e.defective = (b != 0.0);
            } else {
                e.eigenvectors[0] = {a - c, b, 0.0};
            }
            break;
        }
        case EquilibriumLabel::Q3: {
            const double lambda1 = (1.0 - m) * (d.sigma_star - s) / (p - m);
            const double t = (m * (N + 2.0 * s + 2.0) - p * (N - 2.0)) / (p - m);
            const double det = -(p - m) * d.Z0;
            const auto roots = quadratic_roots(t, det);
            // λ2 > 0 > λ3 since det < 0
            const bool first_positive = roots[0].real() > roots[1].real();
            const auto l2 = first_positive ? roots[0] : roots[1];
            const auto l3 = first_positive ? roots[1] : roots[0];
            e.eigenvalues = {lambda1, l2, l3};
            e.eigenvectors = {Vec3{1.0, 0.0, 0.0}, Vec3{0.0, 1.0, l2.real() - t},
                              Vec3{0.0, 1.0, l3.real() - t}};
            break;
        }
    }
    return e;
}

void to_json(nlohmann::ordered_json& j, const Equilibrium& e) {
    nlohmann::ordered_json ev = nlohmann::ordered_json::array();
    for (const auto& l : e.eigenvalues) ev.push_back({{"re", l.real()}, {"im", l.imag()}});
    j = nlohmann::ordered_json{
        {"label", to_string(e.label)},
        {"location", {e.location.x, e.location.y, e.location.z}},
        {"jacobian", e.jacobian},
        {"eigenvalues", ev},
        {"eigenvectors", e.eigenvectors},
        {"defective", e.defective},
    };
}

}  // namespace fdx
