#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "hermvas/errors.hpp"

namespace hermvas::stats {

inline double mean(std::span<const double> x)
{
    double s = 0.0;
    for (double v : x) s += v;
    return x.empty() ? std::nan("") : s / static_cast<double>(x.size());
}

/// k-th central sample moment (divisor n).
inline double central_moment(std::span<const double> x, int k)
{
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += std::pow(v - m, k);
    return s / static_cast<double>(x.size());
}

/// Unbiased sample variance (divisor n - 1).
inline double variance(std::span<const double> x)
{
    if (x.size() < 2) return std::nan("");
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

inline double stddev(std::span<const double> x) { return std::sqrt(variance(x)); }

/// Moment skewness m3 / m2^{3/2}.
inline double skewness(std::span<const double> x)
{
    const double m2 = central_moment(x, 2);
    return central_moment(x, 3) / std::pow(m2, 1.5);
}

/// Excess kurtosis m4 / m2^2 - 3.
inline double excess_kurtosis(std::span<const double> x)
{
    const double m2 = central_moment(x, 2);
    return central_moment(x, 4) / (m2 * m2) - 3.0;
}

/**
 * Standard error of the sample skewness from its empirical influence function
 *   IF(x) = z^3 - 3z - (3/2) g1 (z^2 - 1),  z = (x - mean)/sd.
 * Unlike sqrt(6/n) this stays valid for skewed, heavy-tailed samples.
 */
inline double skewness_standard_error(std::span<const double> x)
{
    const double m = mean(x);
    const double sd = std::sqrt(central_moment(x, 2));
    const double g1 = skewness(x);
    double s = 0.0;
    for (double v : x) {
        const double z = (v - m) / sd;
        const double inf = z * z * z - 3.0 * z - 1.5 * g1 * (z * z - 1.0);
        s += inf * inf;
    }
    const double n = static_cast<double>(x.size());
    return std::sqrt(s / n / n);
}

/// Standard error of the unbiased sample variance, sqrt((m4 - m2^2) / n).
inline double variance_standard_error(std::span<const double> x)
{
    const double m2 = central_moment(x, 2);
    const double m4 = central_moment(x, 4);
    return std::sqrt((m4 - m2 * m2) / static_cast<double>(x.size()));
}

inline double covariance(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size()) throw ParameterError("covariance: length mismatch");
    const double mx = mean(x);
    const double my = mean(y);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - mx) * (y[i] - my);
    return s / static_cast<double>(x.size() - 1);
}

inline double correlation(std::span<const double> x, std::span<const double> y)
{
    return covariance(x, y) / (stddev(x) * stddev(y));
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Kolmogorov-Smirnov distance sup |F_n - Phi|.
inline double ks_normal(std::span<const double> x)
{
    std::vector<double> s(x.begin(), x.end());
    std::sort(s.begin(), s.end());
    const double n = static_cast<double>(s.size());
    double d = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double f = normal_cdf(s[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

struct LogLogFit {
    double slope;
    double intercept;
    double r2;
};

/// Ordinary least squares of log(y) on log(x).
inline LogLogFit loglog_fit(std::span<const std::pair<double, double>> points)
{
    if (points.size() < 2) throw ParameterError("loglog_fit: need at least two points");
    std::vector<double> lx;
    std::vector<double> ly;
    for (const auto& [x, y] : points) {
        if (!(x > 0.0) || !(y > 0.0)) throw ParameterError("loglog_fit: coordinates must be positive");
        lx.push_back(std::log(x));
        ly.push_back(std::log(y));
    }
    const double mx = mean(lx);
    const double my = mean(ly);
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (sxx == 0.0) throw ParameterError("loglog_fit: abscissae must not all coincide");
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        const double r = ly[i] - (intercept + slope * lx[i]);
        sse += r * r;
    }
    const double r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    return {slope, intercept, r2};
}

} // namespace hermvas::stats
