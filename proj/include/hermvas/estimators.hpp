#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hermvas/errors.hpp"
#include "hermvas/hermite_sim.hpp"
#include "hermvas/vasicek.hpp"

namespace hermvas {

/// Trapezoid rule for int_0^T x_t dt over the path's grid.
inline double integrate_path(const SamplePath& path)
{
    const auto& v = path.values;
    double inner = 0.0;
    for (std::size_t k = 1; k + 1 < v.size(); ++k) inner += v[k];
    return path.grid.dt() * (inner + 0.5 * (v.front() + v.back()));
}

/// Moment estimates from one observed path. `a_hat` is empty when the
/// empirical variance is degenerate; `b_hat` is always available.
struct EstimateResult {
    double alpha_T = 0.0;
    std::optional<double> a_hat;
    double b_hat = 0.0;
    double T = 0.0;

    bool degenerate() const noexcept { return !a_hat.has_value(); }

    /// a_hat, or DegenerateVariance when it is undefined.
    double a_hat_or_throw() const
    {
        if (!a_hat) {
            throw DegenerateVariance("estimate: alpha_T = " + std::to_string(alpha_T) +
                                     " is degenerate; a_hat is undefined");
        }
        return *a_hat;
    }
};

/// a such that a^{-2H} H Gamma(2H) = alpha.
inline double invert_second_moment(double alpha, double H)
{
    detail::require(alpha > 0.0, "invert_second_moment: alpha must be positive");
    return std::pow(alpha / (H * std::tgamma(2.0 * H)), -1.0 / (2.0 * H));
}

/// Relative threshold below which alpha_T counts as zero (scaled by max|X|^2).
inline constexpr double degenerate_variance_threshold = 1e-12;

/**
 * b_hat = (1/T) int X dt,
 * alpha_T = (1/T) int X^2 dt - b_hat^2,
 * a_hat = (alpha_T / (H Gamma(2H)))^{-1/(2H)},
 * with trapezoid integrals. Only H enters; q is carried for bookkeeping.
 */
inline EstimateResult estimate(const SamplePath& path, const HermiteSpec& spec)
{
    const double T = path.grid.T;
    std::vector<double> sq(path.values.size());
    double scale = 0.0;
    for (std::size_t k = 0; k < sq.size(); ++k) {
        sq[k] = path.values[k] * path.values[k];
        scale = std::max(scale, std::abs(path.values[k]));
    }

    EstimateResult r;
    r.T = T;
    r.b_hat = integrate_path(path) / T;
    r.alpha_T = integrate_path(SamplePath(path.grid, std::move(sq))) / T - r.b_hat * r.b_hat;
    if (r.alpha_T > degenerate_variance_threshold * scale * scale && r.alpha_T > 0.0) {
        r.a_hat = invert_second_moment(r.alpha_T, spec.H());
    }
    return r;
}

// ---------------------------------------------------------------------------

/// Realized value of G_T = T^{(2/q)(1-H)+2H} int_0^1 (U_T(t)^2 - E U_T(t)^2) dt.
struct GTResult {
    double T;
    double g_T;
    HermiteSpec spec;
};

/// Points per unit time the inner grid needs per unit of T.
inline constexpr std::size_t gt_points_per_layer = 64;

inline bool gt_regime(const HermiteSpec& spec) noexcept
{
    return spec.q() >= 2 || spec.H() > 0.75;
}

/**
 * Sampler for G_T with the centering profile E[U_T(t_k)^2] precomputed once.
 * U_T is the OU path with rate T driven by Z^{q,H} on [0,1].
 */
class GtSampler {
public:
    GtSampler(const HermiteSpec& spec, double T, const GridSpec& inner_grid, HermiteSimOptions sim = {})
        : spec_(spec), T_(T), grid_(inner_grid), sim_(sim)
    {
        detail::require(gt_regime(spec), "compute_gt: requires q >= 2, or q = 1 with H > 3/4");
        detail::require(T > 0.0, "compute_gt: T must be positive");
        detail::require(inner_grid.T == 1.0, "compute_gt: inner grid must cover [0, 1]");
        if (static_cast<double>(inner_grid.n) < static_cast<double>(gt_points_per_layer) * T) {
            throw ConfigurationError("compute_gt: inner grid of " + std::to_string(inner_grid.n) +
                                     " steps does not resolve the 1/T boundary layer; need at least " +
                                     std::to_string(static_cast<std::size_t>(
                                         std::ceil(static_cast<double>(gt_points_per_layer) * T))));
        }
        centering_.resize(grid_.n + 1);
        for (std::size_t k = 0; k <= grid_.n; ++k) {
            centering_[k] = expected_y_squared(T, spec.H(), grid_.time(k));
        }
        prefactor_ = std::pow(T, 2.0 / spec.q() * (1.0 - spec.H()) + 2.0 * spec.H());
    }

    GTResult sample(std::uint64_t seed) const
    {
        const auto z = simulate_hermite(spec_, grid_, seed, sim_);
        const auto u = ou_path(T_, z);
        std::vector<double> centred(u.values.size());
        for (std::size_t k = 0; k < centred.size(); ++k) {
            centred[k] = u.values[k] * u.values[k] - centering_[k];
        }
        return {T_, prefactor_ * integrate_path(SamplePath(grid_, std::move(centred))), spec_};
    }

    const std::vector<double>& centering() const noexcept { return centering_; }

private:
    HermiteSpec spec_;
    double T_;
    GridSpec grid_;
    HermiteSimOptions sim_;
    std::vector<double> centering_;
    double prefactor_ = 0.0;
};

inline GTResult compute_gt(const HermiteSpec& spec, double T, const GridSpec& inner_grid, std::uint64_t seed,
                           const HermiteSimOptions& sim = {})
{
    return GtSampler(spec, T, inner_grid, sim).sample(seed);
}

} // namespace hermvas
