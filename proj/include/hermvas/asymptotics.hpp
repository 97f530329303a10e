#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "hermvas/errors.hpp"
#include "hermvas/hermite_sim.hpp"
#include "hermvas/quadrature.hpp"

namespace hermvas {

// ---------------------------------------------------------------------------
// sigma_H

namespace detail {

/// int_lo^hi z^p g(z) dz for 0 <= lo < hi, splitting off the weight
/// singularity at 0 (only relevant below z = 1).
template <class G>
double power_times_smooth(G&& g, double lo, double hi, double p, quad::Resolution res)
{
    if (hi <= lo) return 0.0;
    double acc = 0.0;
    double mid = lo;
    if (lo < 1.0) {
        mid = std::min(hi, 1.0);
        acc += quad::power_weighted(g, lo, mid, p, res);
    }
    if (hi > mid) {
        const int panels = static_cast<int>(std::ceil(hi - mid));
        acc += quad::smooth([&](double z) { return std::pow(z, p) * g(z); }, mid, hi, res, panels);
    }
    return acc;
}

} // namespace detail

/**
 * Inner function of sigma_H:
 *   F(x) = int int_{R_+^2} e^{-(u+v)} |u - v - x|^{2H-2} du dv
 *        = (1/2) int_R e^{-|w|} |w - x|^{2H-2} dw.
 * Even in x. The three pieces of the w-integral (w < 0, 0 < w < |x|,
 * w > |x|) are integrated separately; the last one is e^{-|x|} Gamma(2H-1).
 */
inline double sigma_inner(double x, double H, quad::Resolution res = {1})
{
    detail::require(H > 0.5 && H < 1.0, "sigma_inner: H must lie in (1/2, 1)");
    x = std::abs(x);
    const double p = 2.0 * H - 2.0;
    constexpr double span = 60.0;  // e^-60 truncation of the exponential tails

    // w < 0: int_x^{x+span} e^{-(z-x)} z^p dz
    const double left = detail::power_times_smooth([x](double z) { return std::exp(x - z); }, x, x + span, p, res);
    // 0 < w < x: int_{x-span}^{x} e^{-(x-y)} y^p dy
    const double middle =
        detail::power_times_smooth([x](double y) { return std::exp(y - x); }, std::max(0.0, x - span), x, p, res);
    const double right = std::exp(-x) * std::tgamma(2.0 * H - 1.0);
    return 0.5 * (left + middle + right);
}

struct SigmaOptions {
    int level = 1;
    /// Beyond this x the integrand is replaced by its large-x expansion.
    double cutoff = 200.0;
};

namespace detail {

/// int_X^inf F(x)^2 dx from F(x) ~ x^{b-1} (1 + A/x^2 + B/x^4), b = 2H - 1,
/// A = (b-1)(b-2), B = A (b-3)(b-4). Exponentially small terms are dropped.
inline double sigma_tail(double X, double H)
{
    const double b = 2.0 * H - 1.0;
    const double A = (b - 1.0) * (b - 2.0);
    const double B = A * (b - 3.0) * (b - 4.0);
    const double e = 2.0 * b - 2.0;
    return std::pow(X, e + 1.0) / -(e + 1.0) + 2.0 * A * std::pow(X, e - 1.0) / -(e - 1.0) +
           (A * A + 2.0 * B) * std::pow(X, e - 3.0) / -(e - 3.0);
}

inline double sigma_h_uncached(double H, const SigmaOptions& opts)
{
    const quad::Resolution res{opts.level};
    auto f2 = [&](double x) {
        const double f = sigma_inner(x, H, res);
        return f * f;
    };
    // F is smooth for x > 0 but F(x) - F(0) ~ x^{2H-1} at the origin
    auto breaks = quad::graded_mesh(0.0, 1.0, 12 + 4 * opts.level, 4 << opts.level);
    const int outer = 48 << opts.level;
    const double ratio = std::pow(opts.cutoff, 1.0 / outer);
    double x = 1.0;
    for (int j = 1; j <= outer; ++j) {
        x = j == outer ? opts.cutoff : x * ratio;
        breaks.push_back(x);
    }
    const double half_line = quad::composite(f2, breaks) + sigma_tail(opts.cutoff, H);
    const double integral = 2.0 * half_line;
    const double g = std::tgamma(2.0 * H);
    return (2.0 * H - 1.0) / (H * g * g) * std::sqrt(integral);
}

} // namespace detail

/**
 * sigma_H = (2H-1) / (H Gamma(2H)^2) * sqrt( int_R F(x)^2 dx ), 1/2 < H < 3/4.
 * Results are memoized per (H, level).
 */
inline double sigma_h(double H, const SigmaOptions& opts = {})
{
    detail::require(H > 0.5 && H < 0.75, "sigma_h: requires 1/2 < H < 3/4");
    static detail::MemoTable<std::tuple<double, int, double>, double> memo(64);
    const double v = memo.get({H, opts.level, opts.cutoff}, [&] { return detail::sigma_h_uncached(H, opts); });
    if (!std::isfinite(v) || v <= 0.0) {
        throw NumericalError("sigma_h: quadrature produced " + std::to_string(v) + " at H=" + std::to_string(H));
    }
    return v;
}

// ---------------------------------------------------------------------------
// B_{H,q}

/// Index of the Rosenblatt limit, H' = 1 - (2/q)(1 - H).
inline double rosenblatt_index(const HermiteSpec& spec) noexcept
{
    return 1.0 - 2.0 / spec.q() * (1.0 - spec.H());
}

inline double b_constant(const HermiteSpec& spec)
{
    const double h0 = spec.h0();
    if (!(4.0 * h0 - 3.0 > 0.0)) {
        throw ParameterError("b_constant: requires q >= 2, or q = 1 with H > 3/4 (4 H0 - 3 = " +
                             std::to_string(4.0 * h0 - 3.0) + ")");
    }
    const double H = spec.H();
    const double s = 2.0 * H + 2.0 / spec.q() * (1.0 - H);
    return H * (2.0 * H - 1.0) / std::sqrt((h0 - 0.5) * (4.0 * h0 - 3.0)) * std::tgamma(s) / (s - 1.0);
}

// ---------------------------------------------------------------------------
// Limit laws of the estimator fluctuations

enum class FluctuationCase { GaussianSubcritical, GaussianCritical, GaussianSupercritical, HermiteDriven };

inline std::string_view to_string(FluctuationCase c) noexcept
{
    switch (c) {
    case FluctuationCase::GaussianSubcritical: return "GaussianSubcritical";
    case FluctuationCase::GaussianCritical: return "GaussianCritical";
    case FluctuationCase::GaussianSupercritical: return "GaussianSupercritical";
    case FluctuationCase::HermiteDriven: return "HermiteDriven";
    }
    return "?";
}

enum class LimitKind { Gaussian, Rosenblatt, Hermite };

inline std::string_view to_string(LimitKind k) noexcept
{
    switch (k) {
    case LimitKind::Gaussian: return "Gaussian";
    case LimitKind::Rosenblatt: return "Rosenblatt";
    case LimitKind::Hermite: return "Hermite";
    }
    return "?";
}

/**
 * Limit variable of one normalized error component.
 *
 * Gaussian: scale * N.
 * Rosenblatt: sign * scale * R, R a unit-variance Rosenblatt variable of index
 *   `index`; scale = |coefficient| * B_{H,q}. With `fbm_square_correction`
 *   the limit is coefficient * (G_inf - (B_1^H)^2), G_inf = B_{H,q} R.
 * Hermite: scale * Z_1^{order,index}.
 */
struct LimitDescriptor {
    LimitKind kind = LimitKind::Gaussian;
    double scale = 0.0;
    double sign = 1.0;
    double index = 0.0;
    int order = 1;
    double coefficient = 0.0;
    double rosenblatt_scale = 0.0;
    bool fbm_square_correction = false;
};

struct FluctuationLaw {
    FluctuationCase case_id;
    double a_rate_exponent;
    /// Critical case: the a-normalizer is sqrt(T / log T) instead of T^{1/2}.
    bool a_rate_log;
    double b_rate_exponent;
    LimitDescriptor a_limit;
    LimitDescriptor b_limit;
    bool components_independent;

    /// Normalizer of a_hat - a at horizon T.
    double a_normalizer(double T) const
    {
        return a_rate_log ? std::sqrt(T / std::log(T)) : std::pow(T, a_rate_exponent);
    }
    double b_normalizer(double T) const { return std::pow(T, b_rate_exponent); }
};

inline FluctuationCase classify(const HermiteSpec& spec) noexcept
{
    if (spec.q() >= 2) return FluctuationCase::HermiteDriven;
    if (spec.H() < 0.75) return FluctuationCase::GaussianSubcritical;
    if (spec.H() == 0.75) return FluctuationCase::GaussianCritical;
    return FluctuationCase::GaussianSupercritical;
}

inline FluctuationLaw fluctuation_law(const HermiteSpec& spec, double a)
{
    detail::require(a > 0.0 && std::isfinite(a), "fluctuation_law: a must be positive");
    const double H = spec.H();
    const double g2h = std::tgamma(2.0 * H);
    const double denom = 2.0 * H * H * g2h;

    FluctuationLaw law{};
    law.case_id = classify(spec);
    law.b_rate_exponent = 1.0 - H;
    law.a_rate_log = false;

    if (spec.q() == 1) {
        law.b_limit = {LimitKind::Gaussian, 1.0 / a, 1.0, H, 1, 1.0 / a, 0.0, false};
    } else {
        law.b_limit = {LimitKind::Hermite, 1.0 / a, 1.0, H, spec.q(), 1.0 / a, 0.0, false};
    }

    switch (law.case_id) {
    case FluctuationCase::GaussianSubcritical: {
        law.a_rate_exponent = 0.5;
        const double coef = std::pow(a, 1.0 + 4.0 * H) * sigma_h(H) / denom;
        law.a_limit = {LimitKind::Gaussian, coef, -1.0, 0.0, 1, -coef, 0.0, false};
        law.components_independent = true;
        break;
    }
    case FluctuationCase::GaussianCritical: {
        law.a_rate_exponent = 0.5;
        law.a_rate_log = true;
        const double scale = 0.75 * std::sqrt(a / std::numbers::pi);
        law.a_limit = {LimitKind::Gaussian, scale, 1.0, 0.0, 1, scale, 0.0, false};
        law.components_independent = true;
        break;
    }
    case FluctuationCase::GaussianSupercritical: {
        law.a_rate_exponent = 2.0 * (1.0 - H);
        const double coef = std::pow(a, 2.0 * H - 1.0) / denom;
        const double bq = b_constant(spec);
        law.a_limit = {LimitKind::Rosenblatt, coef * bq, -1.0, rosenblatt_index(spec), 2, -coef, bq, true};
        law.components_independent = false;
        break;
    }
    case FluctuationCase::HermiteDriven: {
        law.a_rate_exponent = 2.0 / spec.q() * (1.0 - H);
        const double coef = std::pow(a, 1.0 - law.a_rate_exponent) / denom;
        const double bq = b_constant(spec);
        law.a_limit = {LimitKind::Rosenblatt, coef * bq, -1.0, rosenblatt_index(spec), 2, -coef, bq, false};
        law.components_independent = false;
        break;
    }
    }
    return law;
}

} // namespace hermvas
