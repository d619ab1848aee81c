#pragma once

#include <array>
#include <complex>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

namespace fdx {

/// Exponents of u_t = Δu^m − |x|^σ u^p restricted to the fast-diffusion,
/// finite-extinction range m_c < m < 1, p > 1, σ > σ* = 2(p−1)/(1−m).
///
/// Instances only come out of validate_params(), so holding a Params means
/// the range inequalities hold strictly.
class Params {
public:
    double m() const noexcept { return m_; }
    double p() const noexcept { return p_; }
    int N() const noexcept { return N_; }
    double sigma() const noexcept { return sigma_; }

    friend Params validate_params(double m, double p, double N, double sigma);
    friend bool operator==(const Params&, const Params&) = default;

private:
    Params(double m, double p, int N, double sigma) : m_(m), p_(p), N_(N), sigma_(sigma) {}
    double m_, p_;
    int N_;
    double sigma_;
};

/// Throws fdx::Error carrying the first violated inequality, checked in the
/// order: finiteness, dimension, m > m_c, m < 1, p > 1, σ > σ*.
Params validate_params(double m, double p, double N, double sigma);

/// Critical fast-diffusion exponent (N−2)₊/N.
double critical_m(int N) noexcept;

/// Closed-form constants attached to a parameter set.
struct Derived {
    double sigma_star;
    double alpha;
    double beta;
    double Z0;
    double L;       // (m Z0)^{1/(p−m)}
    double C0;      // stationary-solution constant, equal to L
    double q_tail;  // (σ+2)/(p−m)
    double y_Q2;    // −(N−2)/m
    double y_Q3;    // −(σ+2)/(p−m)
    double y_strip; // −2/(1−m)
};

Derived derive_constants(const Params& params);

void to_json(nlohmann::ordered_json& j, const Derived& d);

struct PhasePoint {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend bool operator==(const PhasePoint&, const PhasePoint&) = default;
};

using Vec3 = std::array<double, 3>;
using Matrix3 = std::array<Vec3, 3>;

inline Vec3 as_vec(const PhasePoint& q) noexcept { return {q.x, q.y, q.z}; }
inline PhasePoint as_point(const Vec3& v) noexcept { return {v[0], v[1], v[2]}; }

/// Right-hand side of the autonomous system in η = ln ξ:
///   ẋ = x(2 + (1−m)y)
///   ẏ = −x − (N−2)y + z − m y² − ((p−m)/(σ+2)) x y
///   ż = z(σ + 2 + (p−m)y)
Vec3 vector_field(const Params& params, const PhasePoint& q) noexcept;

/// Analytic Jacobian of vector_field.
Matrix3 jacobian(const Params& params, const PhasePoint& q) noexcept;

/// Central finite differences of vector_field with step h.
Matrix3 numeric_jacobian(const Params& params, const PhasePoint& q, double h);

enum class EquilibriumLabel { Q1, Q2, Q3 };

std::string_view to_string(EquilibriumLabel label) noexcept;

PhasePoint equilibrium_location(const Params& params, EquilibriumLabel label) noexcept;

struct Equilibrium {
    EquilibriumLabel label;
    PhasePoint location;
    Matrix3 jacobian;
    std::array<std::complex<double>, 3> eigenvalues;
    std::array<Vec3, 3> eigenvectors;
    // Repeated eigenvalue with a single eigendirection (Jordan block); the
    // affected eigenvector slot repeats the available direction.
    bool defective = false;
};

/// Closed-form spectrum of the linearization at Q1, Q2 or Q3.
/// Q2 requires N ≥ 3 (for N ≤ 2 it merges with Q1 or leaves y < 0) and
/// throws ErrorCode::DegenerateDimension otherwise.
Equilibrium equilibrium_spectrum(const Params& params, EquilibriumLabel label);

void to_json(nlohmann::ordered_json& j, const Equilibrium& e);

}  // namespace fdx
