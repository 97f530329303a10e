#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "hermvas/errors.hpp"

namespace hermvas::quad {

/// Resolution knob shared by all composite rules. Level k uses 2^k times the
/// base panel count; geometric grading depth grows linearly with k.
struct Resolution {
    int level = 0;
};

template <class F>
double gauss20(F&& f, double a, double b)
{
    return boost::math::quadrature::gauss<double, 20>::integrate(f, a, b);
}

/// Composite 20-point Gauss-Legendre over consecutive breakpoints.
template <class F>
double composite(F&& f, std::span<const double> breaks)
{
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        if (breaks[i + 1] > breaks[i]) sum += gauss20(f, breaks[i], breaks[i + 1]);
    }
    return sum;
}

/**
 * Breakpoints on [a, b] graded geometrically toward a.
 *
 * `depth` panels shrink by `ratio` toward a; the remaining outer part is split
 * into `uniform` equal panels. Suited to integrands whose derivatives blow up
 * like (x - a)^s at the left end.
 */
inline std::vector<double> graded_mesh(double a, double b, int depth, int uniform,
                                       double ratio = 0.15)
{
    std::vector<double> br;
    br.reserve(static_cast<std::size_t>(depth + uniform + 2));
    br.push_back(a);
    const double len = b - a;
    // first outer breakpoint at a + ratio*len; geometric layers below it
    for (int k = depth; k >= 1; --k) br.push_back(a + len * std::pow(ratio, k));
    const double start = depth > 0 ? a + len * ratio : a;
    for (int j = 1; j <= uniform; ++j) {
        br.push_back(start + (b - start) * static_cast<double>(j) / uniform);
    }
    br.back() = b;
    return br;
}

/**
 * Integral of z^p g(z) over [lo, hi] with 0 <= lo < hi and -1 < p <= 0.
 *
 * The change of variables r = z^(p+1) absorbs the algebraic weight, and the
 * remaining (mildly non-smooth at r = 0) integrand is handled on a mesh graded
 * toward the lower end.
 */
template <class G>
double power_weighted(G&& g, double lo, double hi, double p, Resolution res = {})
{
    if (!(p > -1.0 && p <= 0.0)) throw ParameterError("power_weighted: exponent must lie in (-1, 0]");
    if (!(lo >= 0.0 && hi > lo)) {
        if (hi == lo) return 0.0;
        throw ParameterError("power_weighted: need 0 <= lo <= hi");
    }
    const double e = p + 1.0;
    const double r0 = std::pow(lo, e);
    const double r1 = std::pow(hi, e);
    const double inv = 1.0 / e;
    auto h = [&](double r) { return g(std::pow(r, inv)); };
    const int depth = 10 + 4 * res.level;
    const int uniform = 8 << res.level;
    const auto br = graded_mesh(r0, r1, depth, uniform);
    return composite(h, br) / e;
}

/// Smooth integrand on [a, b] with exponential-scale variation: plain
/// composite rule on 8*2^level equal panels.
template <class F>
double smooth(F&& f, double a, double b, Resolution res = {}, int base_panels = 8)
{
    if (b <= a) return 0.0;
    const int n = base_panels << res.level;
    std::vector<double> br(static_cast<std::size_t>(n + 1));
    for (int j = 0; j <= n; ++j) br[j] = a + (b - a) * static_cast<double>(j) / n;
    br.back() = b;
    return composite(f, br);
}

} // namespace hermvas::quad
