#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "hermvas/errors.hpp"
#include "hermvas/hermite_sim.hpp"
#include "hermvas/quadrature.hpp"

namespace hermvas {

/// Drift parameters of dX = a(b - X)dt + dZ.
struct VasicekParams {
    double a;  ///< mean-reversion rate, > 0
    double b;  ///< long-run mean

    friend bool operator==(const VasicekParams&, const VasicekParams&) = default;
};

/**
 * State path X of dX = a(b - X)dt + dZ, X_0 = 0, on the driver's grid.
 *
 * The drift is integrated exactly; each driver increment enters with the
 * midpoint weight exp(-a dt/2):
 *   X_{k+1} = e^{-a dt} X_k + b (1 - e^{-a dt}) + e^{-a dt/2} (Z_{k+1} - Z_k).
 */
inline SamplePath vasicek_path(const VasicekParams& params, const SamplePath& driver)
{
    detail::require(params.a > 0.0 && std::isfinite(params.a), "vasicek_path: a must be positive");
    detail::require(driver.values.front() == 0.0, "vasicek_path: driver must start at 0");

    const double dt = driver.grid.dt();
    const double decay = std::exp(-params.a * dt);
    const double half = std::exp(-0.5 * params.a * dt);
    const double pull = params.b * -std::expm1(-params.a * dt);

    const auto& z = driver.values;
    std::vector<double> x(z.size());
    x[0] = 0.0;
    for (std::size_t k = 0; k + 1 < z.size(); ++k) {
        x[k + 1] = decay * x[k] + pull + half * (z[k + 1] - z[k]);
    }
    SamplePath out(driver.grid, std::move(x));
    out.warnings = driver.warnings;
    return out;
}

/// Y_t = int_0^t e^{-a(t-u)} dZ_u; identical to vasicek_path with b = 0.
inline SamplePath ou_path(double a, const SamplePath& driver)
{
    return vasicek_path({a, 0.0}, driver);
}

/// lim_{t->inf} E[Y_t^2] = a^{-2H} H Gamma(2H).
inline double stationary_second_moment(double a, double H)
{
    detail::require(a > 0.0, "stationary_second_moment: a must be positive");
    detail::require(H > 0.5 && H < 1.0, "stationary_second_moment: H must lie in (1/2, 1)");
    return std::pow(a, -2.0 * H) * H * std::tgamma(2.0 * H);
}

struct QuadratureOptions {
    int level = 1;
    /// Relative agreement required between `level` and `level + 1`.
    double rel_tol = 1e-9;
};

namespace detail {

/// H(2H-1) int int_{[0,t]^2} e^{-a(u+v)} |u-v|^{2H-2} du dv, reduced with
/// w = u - v to (H(2H-1)/a) int_0^t w^{2H-2} (e^{-aw} - e^{-a(2t-w)}) dw.
inline double y_second_moment_at_level(double a, double H, double t, int level)
{
    const double p = 2.0 * H - 2.0;
    // beyond w = 60/a the integrand is below e^-60 relative to its peak
    const double upper = std::min(t, 60.0 / a);
    auto g = [&](double w) { return std::exp(-a * w) - std::exp(-a * (2.0 * t - w)); };
    const double integral = quad::power_weighted(g, 0.0, upper, p, {level});
    return H * (2.0 * H - 1.0) / a * integral;
}

} // namespace detail

/**
 * E[Y_t^2] for the OU component driven by any Hermite process of index H.
 * t = +infinity returns the closed-form limit a^{-2H} H Gamma(2H).
 * Throws NumericalError if two successive refinements disagree.
 */
inline double expected_y_squared(double a, double H, double t, const QuadratureOptions& opts = {})
{
    detail::require(a > 0.0, "expected_y_squared: a must be positive");
    detail::require(H > 0.5 && H < 1.0, "expected_y_squared: H must lie in (1/2, 1)");
    detail::require(t >= 0.0, "expected_y_squared: t must be >= 0");
    if (t == 0.0) return 0.0;
    if (std::isinf(t)) return stationary_second_moment(a, H);

    const double coarse = detail::y_second_moment_at_level(a, H, t, opts.level);
    const double fine = detail::y_second_moment_at_level(a, H, t, opts.level + 1);
    if (!(std::abs(fine - coarse) <= opts.rel_tol * std::abs(fine))) {
        throw NumericalError("expected_y_squared: no convergence at a=" + std::to_string(a) +
                             ", H=" + std::to_string(H) + ", t=" + std::to_string(t) + " (level " +
                             std::to_string(opts.level) + ": " + std::to_string(coarse) + ", level " +
                             std::to_string(opts.level + 1) + ": " + std::to_string(fine) + ")");
    }
    return fine;
}

} // namespace hermvas
