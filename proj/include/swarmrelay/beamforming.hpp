#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <span>
#include <variant>
#include <vector>

#include "swarmrelay/core.hpp"
#include "swarmrelay/random.hpp"

namespace swarmrelay {

/// Element positions and excitation weights of one virtual antenna array.
struct ArrayState {
    std::vector<Position3> positions;
    std::vector<double> currents;
    double wavelength_m = 0.0;

    [[nodiscard]] double phase_constant() const { return 2.0 * pi / wavelength_m; }
    [[nodiscard]] std::size_t size() const { return positions.size(); }

    [[nodiscard]] bool valid() const {
        if (positions.empty() || positions.size() != currents.size()) return false;
        if (!(wavelength_m > 0.0) || !std::isfinite(wavelength_m)) return false;
        for (double c : currents)
            if (!(c >= 0.0 && c <= 1.0)) return false;
        for (const auto& p : positions)
            if (!p.finite()) return false;
        return true;
    }

    [[nodiscard]] double current_sum() const {
        double s = 0.0;
        for (double c : currents) s += c;
        return s;
    }

    /// Transmit-power scale: sum of squared weights.
    [[nodiscard]] double power_weight() const {
        double s = 0.0;
        for (double c : currents) s += c * c;
        return s;
    }
};

/// theta: polar angle from +z in [0, pi]; phi: azimuth from +x in [0, 2 pi).
struct SphericalDirection {
    double theta = 0.0;
    double phi = 0.0;

    [[nodiscard]] Position3 unit_vector() const {
        const double st = std::sin(theta);
        return {st * std::cos(phi), st * std::sin(phi), std::cos(theta)};
    }
};

/// Direction of `to` as seen from `from`.
inline SphericalDirection direction_between(const Position3& from, const Position3& to) {
    const Position3 d = to - from;
    const double r = d.norm();
    if (!(r > 0.0)) throw DegenerateError("direction_between: coincident points");
    double phi = std::atan2(d.y, d.x);
    if (phi < 0.0) phi += 2.0 * pi;
    if (phi >= 2.0 * pi) phi = 0.0;
    return {std::acos(std::clamp(d.z / r, -1.0, 1.0)), phi};
}

/// Uniform (theta, phi) grid for the pattern integral.
struct QuadratureSpec {
    std::size_t n_theta = 181;
    std::size_t n_phi = 360;
};

/// Exact evaluation of the pattern integral for isotropic elements:
/// the double integral of |F|^2 over the sphere equals
/// 4 pi * sum_uv I_u I_v sinc(p |x_u - x_v|).
struct ClosedFormIntegral {};

using GainIntegration = std::variant<QuadratureSpec, ClosedFormIntegral>;

namespace detail {

inline void require_valid(const ArrayState& a, const char* where) {
    if (!a.valid()) throw RangeError(std::string(where) + ": invalid array state");
}

inline double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }

}  // namespace detail

/// Far-field array factor F(theta, phi) = sum_u I_u exp(i p (r_hat . x_u)).
inline std::complex<double> array_factor(const ArrayState& a, const SphericalDirection& d) {
    detail::require_valid(a, "array_factor");
    const Position3 k = d.unit_vector() * a.phase_constant();
    std::complex<double> f{0.0, 0.0};
    for (std::size_t u = 0; u < a.size(); ++u) f += a.currents[u] * std::polar(1.0, k.dot(a.positions[u]));
    return f;
}

/// Double integral of |F|^2 sin(theta) over the sphere on a uniform grid:
/// |F|^2 is interpolated linearly in theta and integrated exactly against
/// sin(theta); phi uses the periodic trapezoid rule. Constant patterns
/// integrate to 4 pi up to rounding.
inline double pattern_integral(const ArrayState& a, const QuadratureSpec& q) {
    detail::require_valid(a, "pattern_integral");
    if (q.n_theta < 2 || q.n_phi < 2) throw RangeError("pattern_integral: grid needs n_theta, n_phi >= 2");
    const double p = a.phase_constant();
    const double dtheta = pi / static_cast<double>(q.n_theta - 1);
    const double dphi = 2.0 * pi / static_cast<double>(q.n_phi);
    std::vector<double> cos_phi(q.n_phi), sin_phi(q.n_phi);
    for (std::size_t j = 0; j < q.n_phi; ++j) {
        cos_phi[j] = std::cos(dphi * static_cast<double>(j));
        sin_phi[j] = std::sin(dphi * static_cast<double>(j));
    }
    const double end_weight = 1.0 - std::sin(dtheta) / dtheta;
    const double inner_weight = 2.0 * (1.0 - std::cos(dtheta)) / dtheta;
    double total = 0.0;
    for (std::size_t i = 0; i < q.n_theta; ++i) {
        const double theta = dtheta * static_cast<double>(i);
        const double st = std::sin(theta), ct = std::cos(theta);
        const double w = (i == 0 || i + 1 == q.n_theta) ? end_weight : st * inner_weight;
        double ring = 0.0;
        for (std::size_t j = 0; j < q.n_phi; ++j) {
            const double kx = p * st * cos_phi[j], ky = p * st * sin_phi[j], kz = p * ct;
            double re = 0.0, im = 0.0;
            for (std::size_t u = 0; u < a.size(); ++u) {
                const auto& x = a.positions[u];
                const double ph = kx * x.x + ky * x.y + kz * x.z;
                re += a.currents[u] * std::cos(ph);
                im += a.currents[u] * std::sin(ph);
            }
            ring += re * re + im * im;
        }
        total += w * ring;
    }
    return total * dphi;
}

inline double pattern_integral(const ArrayState& a, const ClosedFormIntegral&) {
    detail::require_valid(a, "pattern_integral");
    const double p = a.phase_constant();
    double s = 0.0;
    for (std::size_t u = 0; u < a.size(); ++u) {
        s += a.currents[u] * a.currents[u];
        for (std::size_t v = u + 1; v < a.size(); ++v)
            s += 2.0 * a.currents[u] * a.currents[v] * detail::sinc(p * distance(a.positions[u], a.positions[v]));
    }
    return 4.0 * pi * s;
}

inline double pattern_integral(const ArrayState& a, const GainIntegration& method) {
    return std::visit([&](const auto& m) { return pattern_integral(a, m); }, method);
}

/// Directional gain 4 pi |F(r)|^2 w(r)^2 eta / integral(|F|^2 w^2) with
/// isotropic elements (w = 1). Throws DegenerateError when the integral is
/// not a positive finite number.
inline double antenna_gain(const ArrayState& a, const SphericalDirection& receiver, const GainIntegration& method,
                           double efficiency = 1.0) {
    const double denom = pattern_integral(a, method);
    if (!(denom > 0.0) || !std::isfinite(denom))
        throw DegenerateError("antenna_gain: pattern integral is not positive");
    return 4.0 * pi * std::norm(array_factor(a, receiver)) * efficiency / denom;
}

/// Array factor under per-element phase errors, F(d) * sum_u I_u exp(i zeta_u).
/// With `normalize_by_current_sum` the product is divided by sum_u I_u, so
/// zero errors give back F.
inline std::function<std::complex<double>(const SphericalDirection&)> array_factor_with_phase_error(
    const ArrayState& a, std::span<const double> errors, bool normalize_by_current_sum = false) {
    detail::require_valid(a, "array_factor_with_phase_error");
    if (errors.size() != a.size()) throw DimensionError("array_factor_with_phase_error: one error per element");
    std::complex<double> factor{0.0, 0.0};
    for (std::size_t u = 0; u < a.size(); ++u) factor += a.currents[u] * std::polar(1.0, errors[u]);
    if (normalize_by_current_sum) {
        const double s = a.current_sum();
        factor = s > 0.0 ? factor / s : std::complex<double>{0.0, 0.0};
    }
    return [a, factor](const SphericalDirection& d) { return array_factor(a, d) * factor; };
}

/// Draws a phase error from the Tikhonov (von Mises) density
/// proportional to exp(kappa cos zeta) on [-pi, pi).
///
/// kappa <= 50: rejection from a uniform proposal with acceptance
/// exp(kappa (cos zeta - 1)). Larger kappa: Best-Fisher rejection from a
/// wrapped Cauchy envelope, which keeps the acceptance rate high.
inline double sample_tikhonov(double kappa, RandomStream& rng) {
    if (!std::isfinite(kappa) || kappa < 0.0) throw RangeError("sample_tikhonov: kappa must be finite and >= 0");
    auto wrap = [](double z) {
        if (z >= pi) z -= 2.0 * pi;
        if (z < -pi) z += 2.0 * pi;
        return z;
    };
    if (kappa <= 50.0) {
        for (;;) {
            const double z = rng.uniform(-pi, pi);
            if (kappa == 0.0 || rng.uniform() < std::exp(kappa * (std::cos(z) - 1.0))) return z;
        }
    }
    const double s = 0.5 / kappa;
    const double r = s + std::sqrt(1.0 + s * s);
    for (;;) {
        const double u1 = rng.uniform();
        const double z = std::cos(pi * u1);
        const double d = z / (r + z);
        const double u2 = rng.uniform();
        if (u2 < 1.0 - d * d || u2 <= (1.0 - d) * std::exp(d)) {
            const double q = 1.0 / r;
            const double f = (q + z) / (1.0 + q * z);
            const double angle = std::acos(std::clamp(f, -1.0, 1.0));
            return wrap(rng.uniform() < 0.5 ? -angle : angle);
        }
    }
}

}  // namespace swarmrelay
