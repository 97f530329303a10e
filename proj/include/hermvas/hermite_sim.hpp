#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "hermvas/errors.hpp"
#include "hermvas/fft.hpp"
#include "hermvas/rng.hpp"

namespace hermvas {

/// Order q and self-similarity index H of a Hermite process, with the derived
/// kernel exponent H0 = 1 + (H-1)/q and the normalizing constant c(H,q).
class HermiteSpec {
public:
    HermiteSpec(int q, double H) : q_(q), H_(H)
    {
        detail::require(q >= 1, "HermiteSpec: order q must be >= 1");
        detail::require(H > 0.5 && H < 1.0, "HermiteSpec: H must lie in (1/2, 1)");
        h0_ = 1.0 + (H - 1.0) / q;
        const double beta = std::beta(h0_ - 0.5, 2.0 - 2.0 * h0_);
        c_ = std::sqrt(H * (2.0 * H - 1.0) / (std::tgamma(q + 1.0) * std::pow(beta, q)));
    }

    int q() const noexcept { return q_; }
    double H() const noexcept { return H_; }
    double h0() const noexcept { return h0_; }
    double c() const noexcept { return c_; }

    friend bool operator==(const HermiteSpec& a, const HermiteSpec& b) noexcept
    {
        return a.q_ == b.q_ && a.H_ == b.H_;
    }

private:
    int q_;
    double H_;
    double h0_;
    double c_;
};

inline double hermite_constant(const HermiteSpec& spec) { return spec.c(); }

/// Uniform grid t_k = k*T/n, k = 0..n.
struct GridSpec {
    double T;
    std::size_t n;

    GridSpec(double horizon, std::size_t steps) : T(horizon), n(steps)
    {
        detail::require(horizon > 0.0 && std::isfinite(horizon), "GridSpec: horizon must be positive");
        detail::require(steps >= 1, "GridSpec: need at least one step");
    }

    double dt() const noexcept { return T / static_cast<double>(n); }
    double time(std::size_t k) const noexcept
    {
        return k == n ? T : static_cast<double>(k) * dt();
    }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Values on a uniform grid. Carries driver paths Z, OU paths Y and states X.
struct SamplePath {
    GridSpec grid;
    std::vector<double> values;
    std::vector<std::string> warnings;

    SamplePath(GridSpec g, std::vector<double> v) : grid(g), values(std::move(v))
    {
        if (values.size() != grid.n + 1) throw ParameterError("SamplePath: need n+1 values");
    }

    double terminal() const noexcept { return values.back(); }
};

/// Autocovariance of unit-step fractional Gaussian noise,
/// gamma(k) = (|k+1|^2H + |k-1|^2H - 2|k|^2H) / 2.
inline double fgn_covariance(double H, long long lag)
{
    detail::require(H > 0.5 && H < 1.0, "fgn_covariance: H must lie in (1/2, 1)");
    const double k = static_cast<double>(lag < 0 ? -lag : lag);
    if (k == 0.0) return 1.0;
    if (k < 2.0) return 0.5 * (std::pow(2.0, 2.0 * H) - 2.0);
    // (1 +- 1/k)^2H - 1 through expm1/log1p; the direct form cancels badly for large k
    const double x = 1.0 / k;
    const double bracket = std::expm1(2.0 * H * std::log1p(x)) + std::expm1(2.0 * H * std::log1p(-x));
    return 0.5 * std::pow(k, 2.0 * H) * bracket;
}

/// Probabilists' Hermite polynomial He_q.
inline double hermite_polynomial(int q, double x) noexcept
{
    if (q == 0) return 1.0;
    double prev = 1.0;
    double cur = x;
    for (int k = 1; k < q; ++k) {
        const double next = x * cur - k * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

/// Variance of sum_{i<count} He_q(xi_i) for unit fGn xi with index h:
/// q! * sum_{|k|<count} (count - |k|) gamma(k)^q.
inline double partial_sum_variance(double h, int q, std::size_t count)
{
    double acc = 0.0;
    for (std::size_t k = count - 1; k >= 1; --k) {
        acc += static_cast<double>(count - k) * std::pow(fgn_covariance(h, static_cast<long long>(k)), q);
    }
    return std::tgamma(q + 1.0) * (static_cast<double>(count) + 2.0 * acc);
}

namespace detail {

/// Square-root spectral factor of the circulant embedding of unit fGn.
struct CirculantFactor {
    std::size_t n = 0;                 // fGn length
    std::vector<double> sqrt_scaled;   // sqrt(max(lambda_k, 0) / 2n), k < 2n
    bool clipped = false;
};

inline std::shared_ptr<const CirculantFactor> build_circulant_factor(double H, std::size_t n)
{
    const std::size_t m = 2 * n;
    fft::InPlaceFft fft(m);
    auto buf = fft.data();
    for (std::size_t j = 0; j <= n; ++j) buf[j] = fgn_covariance(H, static_cast<long long>(j));
    for (std::size_t j = 1; j < n; ++j) buf[m - j] = buf[j];
    fft.execute();

    auto f = std::make_shared<CirculantFactor>();
    f->n = n;
    f->sqrt_scaled.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
        double lam = buf[k].real();
        if (lam < 0.0) {
            // round-off negatives of order 1e-12 are harmless; anything else is a real defect
            if (lam < -1e-9 * static_cast<double>(m)) f->clipped = true;
            lam = 0.0;
        }
        f->sqrt_scaled[k] = std::sqrt(lam / static_cast<double>(m));
    }
    return f;
}

template <class Key, class Value>
class MemoTable {
public:
    template <class Make>
    Value get(const Key& key, Make&& make)
    {
        {
            std::scoped_lock lock(mutex_);
            if (auto it = table_.find(key); it != table_.end()) return it->second;
        }
        Value v = make();
        std::scoped_lock lock(mutex_);
        if (table_.size() >= capacity_) table_.clear();
        return table_.emplace(key, std::move(v)).first->second;
    }

    explicit MemoTable(std::size_t capacity) : capacity_(capacity) {}

private:
    std::mutex mutex_;
    std::map<Key, Value> table_;
    std::size_t capacity_;
};

inline std::shared_ptr<const CirculantFactor> circulant_factor(double H, std::size_t n)
{
    static MemoTable<std::pair<double, std::size_t>, std::shared_ptr<const CirculantFactor>> memo(12);
    return memo.get({H, n}, [&] { return build_circulant_factor(H, n); });
}

inline double cached_partial_sum_variance(double h, int q, std::size_t count)
{
    static MemoTable<std::tuple<double, int, std::size_t>, double> memo(64);
    return memo.get({h, q, count}, [&] { return partial_sum_variance(h, q, count); });
}

/// One draw of unit-step fGn of length factor.n. Consumes 4n normals.
inline std::vector<double> sample_fgn(const CirculantFactor& factor, rng::NormalStream& normals)
{
    const std::size_t m = 2 * factor.n;
    fft::InPlaceFft fft(m);
    auto buf = fft.data();
    for (std::size_t k = 0; k < m; ++k) {
        const double re = normals();
        const double im = normals();
        buf[k] = std::complex<double>(re, im) * factor.sqrt_scaled[k];
    }
    fft.execute();
    std::vector<double> out(factor.n);
    for (std::size_t k = 0; k < factor.n; ++k) out[k] = buf[k].real();
    return out;
}

} // namespace detail

/**
 * Fractional Brownian motion on `grid` by circulant embedding of the
 * increment covariance dt^2H gamma(k). Deterministic in (H, grid, seed).
 *
 * If the embedding has materially negative eigenvalues they are clipped to zero
 * and a warning is attached to the returned path.
 */
inline SamplePath simulate_fbm(double H, const GridSpec& grid, std::uint64_t seed)
{
    detail::require(H > 0.5 && H < 1.0, "simulate_fbm: H must lie in (1/2, 1)");
    const auto factor = detail::circulant_factor(H, grid.n);
    rng::NormalStream normals(seed);
    const auto xi = detail::sample_fgn(*factor, normals);
    const double scale = std::pow(grid.dt(), H);

    std::vector<double> z(grid.n + 1);
    z[0] = 0.0;
    for (std::size_t k = 0; k < grid.n; ++k) z[k + 1] = z[k] + scale * xi[k];

    SamplePath path(grid, std::move(z));
    if (factor->clipped) path.warnings.emplace_back("circulant embedding had negative eigenvalues; clipped to zero");
    return path;
}

struct HermiteSimOptions {
    /// Internal fGn points per output step.
    std::size_t refinement = 32;
    /// Largest accepted relative error of Var(Z_dt) against dt^2H for the
    /// discrete construction. Coarser settings are rejected.
    double max_step_variance_error = 0.35;
};

/// Relative error |Var_discrete(Z_dt) / dt^2H - 1| of the partial-sum
/// construction at one output step, with Var(Z_T) = T^2H pinned exactly.
inline double hermite_step_variance_error(const HermiteSpec& spec, std::size_t n, std::size_t refinement)
{
    if (spec.q() == 1) return 0.0;
    const double total = detail::cached_partial_sum_variance(spec.h0(), spec.q(), n * refinement);
    const double step = detail::cached_partial_sum_variance(spec.h0(), spec.q(), refinement);
    const double target = std::pow(1.0 / static_cast<double>(n), 2.0 * spec.H());
    return std::abs(step / total / target - 1.0);
}

/**
 * Hermite process Z^{q,H} on `grid`.
 *
 * q = 1 is fBm and delegates to simulate_fbm. For q >= 2 the path is the
 * normalized partial sum of He_q applied to unit fGn of index H0 sampled on
 * n*refinement internal points; the normalizer is the exact standard deviation
 * of the full sum, so Var(Z_T) = T^2H holds exactly at the terminal point.
 */
inline SamplePath simulate_hermite(const HermiteSpec& spec, const GridSpec& grid, std::uint64_t seed,
                                   const HermiteSimOptions& opts = {})
{
    if (spec.q() == 1) return simulate_fbm(spec.H(), grid, seed);
    if (opts.refinement < 1) throw ConfigurationError("simulate_hermite: refinement must be >= 1");

    const double step_err = hermite_step_variance_error(spec, grid.n, opts.refinement);
    if (step_err > opts.max_step_variance_error) {
        throw ConfigurationError("simulate_hermite: refinement " + std::to_string(opts.refinement) +
                                 " gives a one-step variance error of " + std::to_string(step_err) +
                                 " for q=" + std::to_string(spec.q()) + ", H=" + std::to_string(spec.H()) +
                                 "; increase the refinement or the number of steps");
    }

    const std::size_t m = opts.refinement;
    const std::size_t total = grid.n * m;
    const auto factor = detail::circulant_factor(spec.h0(), total);
    rng::NormalStream normals(seed);
    const auto xi = detail::sample_fgn(*factor, normals);

    const double norm = std::pow(grid.T, spec.H()) /
                        std::sqrt(detail::cached_partial_sum_variance(spec.h0(), spec.q(), total));
    std::vector<double> z(grid.n + 1);
    z[0] = 0.0;
    double partial = 0.0;
    for (std::size_t k = 0; k < grid.n; ++k) {
        for (std::size_t j = k * m; j < (k + 1) * m; ++j) partial += hermite_polynomial(spec.q(), xi[j]);
        z[k + 1] = norm * partial;
    }

    SamplePath path(grid, std::move(z));
    if (factor->clipped) path.warnings.emplace_back("circulant embedding had negative eigenvalues; clipped to zero");
    return path;
}

// ---------------------------------------------------------------------------
// Direct discretization of the order-2 multiple Wiener-Ito integral

struct ChaosOracleOptions {
    /// The kernel support extends to -infinity; cells stop at -left_extent*t.
    double left_extent = 1e12;
    /// Width ratio of consecutive cells left of 0.
    double growth = 1.15;
    /// Midpoint-rule nodes for the inner s-integral per uniform cell.
    std::size_t s_points_per_cell = 2;
};

/**
 * Discretized Rosenblatt variable Z_t^{2,H}:
 *
 *   c(H,2) * sum_{i != j} kbar_ij dB_i dB_j,
 *   kbar_ij = cell average of  int_0^t (s-x)_+^{H0-3/2} (s-y)_+^{H0-3/2} ds
 *
 * over [0,t] split into `grid_cells` equal cells plus geometrically growing
 * cells on (-left_extent*t, 0). Diagonal cells are dropped. The cell averages
 * of the inner integrand have a closed form; the s-integral uses the midpoint
 * rule. The double sum is evaluated as
 *   int V(s)^2 ds - sum_i kbar_ii dB_i^2,  V(s) = sum_i A_i(s) dB_i / |cell_i|,
 * with the uniform-cell part of V computed by FFT convolution.
 */
class ChaosOracleQ2 {
public:
    ChaosOracleQ2(double H, double t, std::size_t grid_cells, ChaosOracleOptions opts = {})
        : spec_(2, H), t_(t), n_uniform_(grid_cells), opts_(opts)
    {
        detail::require(t > 0.0, "ChaosOracleQ2: t must be positive");
        detail::require(grid_cells >= 2, "ChaosOracleQ2: need at least two cells on [0,t]");
        detail::require(opts.growth > 1.0, "ChaosOracleQ2: growth ratio must exceed 1");
        detail::require(opts.s_points_per_cell >= 1, "ChaosOracleQ2: need >= 1 s-point per cell");
        build();
    }

    double H() const noexcept { return spec_.H(); }
    double t() const noexcept { return t_; }
    std::size_t cell_count() const noexcept { return edges_.size() - 1; }
    /// Cell boundaries, left to right; the last grid_cells cells tile [0, t].
    const std::vector<double>& cell_edges() const noexcept { return edges_; }
    /// Midpoint nodes of the inner s-integral.
    std::vector<double> s_nodes() const
    {
        std::vector<double> s(k_);
        for (std::size_t k = 0; k < k_; ++k) s[k] = (static_cast<double>(k) + 0.5) * delta_;
        return s;
    }
    const std::vector<std::string>& warnings() const noexcept { return warnings_; }

    /// One realization from `cell_count()` standard normals (cell order).
    double sample_from_normals(std::span<const double> g) const
    {
        if (g.size() != cell_count()) throw ParameterError("ChaosOracleQ2: wrong number of normals");
        const std::size_t nl = n_left_;
        std::vector<double> v(k_, 0.0);

        // left cells: dense
        for (std::size_t i = 0; i < nl; ++i) {
            const double x = g[i] / std::sqrt(width_[i]);
            const double* row = &left_a_[i * k_];
            for (std::size_t k = 0; k < k_; ++k) v[k] += row[k] * x;
        }

        // uniform cells: convolution of the upsampled weights with phi
        {
            fft::InPlaceFft fwd(p_);
            fft::InPlaceFft bwd(p_, fft::Direction::backward);
            auto a = fwd.data();
            std::fill(a.begin(), a.end(), std::complex<double>(0.0, 0.0));
            const double inv_sqrt_h = 1.0 / std::sqrt(h_);
            for (std::size_t i = 0; i < n_uniform_; ++i) a[i * opts_.s_points_per_cell] = g[nl + i] * inv_sqrt_h;
            fwd.execute();
            auto b = bwd.data();
            for (std::size_t k = 0; k < p_; ++k) b[k] = a[k] * phi_hat_[k];
            bwd.execute();
            const double inv_p = 1.0 / static_cast<double>(p_);
            for (std::size_t k = 0; k < k_; ++k) v[k] += b[k].real() * inv_p;
        }

        double square = 0.0;
        for (double x : v) square += x * x;
        square *= delta_;
        double diag = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) diag += diag_[i] * width_[i] * g[i] * g[i];
        return spec_.c() * (square - diag);
    }

    double sample(std::uint64_t seed) const
    {
        rng::NormalStream normals(seed);
        std::vector<double> g(cell_count());
        normals.fill(g.begin(), g.end());
        return sample_from_normals(g);
    }

    /**
     * Exact variance of the discretized variable, 2 c^2 sum_{i != j} kbar_ij^2 |c_i||c_j|.
     * Costs O(cells^2 * s-nodes); intended for convergence studies on modest grids.
     */
    double discrete_variance() const
    {
        const std::size_t n = cell_count();
        std::vector<double> a(n * k_);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < k_; ++k) a[i * k_ + k] = cell_profile(i, (static_cast<double>(k) + 0.5) * delta_);
        }
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                double dot = 0.0;
                for (std::size_t k = 0; k < k_; ++k) dot += a[i * k_ + k] * a[j * k_ + k];
                const double kbar = delta_ * dot / (width_[i] * width_[j]);
                acc += kbar * kbar * width_[i] * width_[j];
            }
        }
        return 2.0 * spec_.c() * spec_.c() * 2.0 * acc;
    }

private:
    /// A_i(s) = int_{cell i} (s - xi)_+^{H0-3/2} dxi.
    double cell_profile(std::size_t i, double s) const
    {
        const double e = spec_.h0() - 0.5;
        const double lo = s - edges_[i];
        const double hi = s - edges_[i + 1];
        const double a = lo > 0.0 ? std::pow(lo, e) : 0.0;
        const double b = hi > 0.0 ? std::pow(hi, e) : 0.0;
        return (a - b) / e;
    }

    void build()
    {
        h_ = t_ / static_cast<double>(n_uniform_);
        k_ = n_uniform_ * opts_.s_points_per_cell;
        delta_ = t_ / static_cast<double>(k_);

        std::vector<double> left;
        const double limit = opts_.left_extent * t_;
        double x = 0.0;
        double w = h_;
        while (x < limit) {
            x += w;
            left.push_back(-x);
            w *= opts_.growth;
        }
        std::reverse(left.begin(), left.end());
        n_left_ = left.size();
        edges_ = left;
        for (std::size_t i = 0; i <= n_uniform_; ++i) {
            edges_.push_back(i == n_uniform_ ? t_ : static_cast<double>(i) * h_);
        }
        width_.resize(cell_count());
        for (std::size_t i = 0; i < cell_count(); ++i) width_[i] = edges_[i + 1] - edges_[i];

        // crude indicator of the kernel mass beyond the window: (L/t)^(2H0-2)
        const double tail = std::pow(opts_.left_extent, 2.0 * spec_.h0() - 2.0);
        if (tail > 0.01) {
            warnings_.emplace_back("truncation window too small: roughly " + std::to_string(100.0 * tail) +
                                   "% of the kernel mass lies left of the window");
        }

        left_a_.resize(n_left_ * k_);
        for (std::size_t i = 0; i < n_left_; ++i) {
            for (std::size_t k = 0; k < k_; ++k) {
                left_a_[i * k_ + k] = cell_profile(i, (static_cast<double>(k) + 0.5) * delta_);
            }
        }

        // phi_j = A(s) for a uniform cell starting at 0, s = (j + 1/2) delta
        std::vector<double> phi(k_);
        const double e = spec_.h0() - 0.5;
        for (std::size_t j = 0; j < k_; ++j) {
            const double s = (static_cast<double>(j) + 0.5) * delta_;
            phi[j] = (std::pow(s, e) - (s > h_ ? std::pow(s - h_, e) : 0.0)) / e;
        }
        p_ = 2 * k_;
        fft::InPlaceFft fft(p_);
        auto buf = fft.data();
        std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
        for (std::size_t j = 0; j < k_; ++j) buf[j] = phi[j];
        fft.execute();
        phi_hat_.assign(buf.begin(), buf.end());

        // diagonal averages kbar_ii = delta * sum_k A_i(s_k)^2 / |c_i|^2
        diag_.resize(cell_count());
        for (std::size_t i = 0; i < n_left_; ++i) {
            double acc = 0.0;
            for (std::size_t k = 0; k < k_; ++k) acc += left_a_[i * k_ + k] * left_a_[i * k_ + k];
            diag_[i] = delta_ * acc / (width_[i] * width_[i]);
        }
        std::vector<double> prefix(k_ + 1, 0.0);
        for (std::size_t j = 0; j < k_; ++j) prefix[j + 1] = prefix[j] + phi[j] * phi[j];
        for (std::size_t i = 0; i < n_uniform_; ++i) {
            const std::size_t len = k_ - i * opts_.s_points_per_cell;
            diag_[n_left_ + i] = delta_ * prefix[len] / (h_ * h_);
        }
    }

    HermiteSpec spec_;
    double t_;
    std::size_t n_uniform_;
    ChaosOracleOptions opts_;

    double h_ = 0.0;
    double delta_ = 0.0;
    std::size_t k_ = 0;
    std::size_t p_ = 0;
    std::size_t n_left_ = 0;
    std::vector<double> edges_;
    std::vector<double> width_;
    std::vector<double> left_a_;
    std::vector<std::complex<double>> phi_hat_;
    std::vector<double> diag_;
    std::vector<std::string> warnings_;
};

/// One realization of the discretized Rosenblatt variable at time t.
/// Builds the kernel on every call; reuse ChaosOracleQ2 for many seeds.
inline double chaos_oracle_q2(double H, double t, std::size_t grid_cells, std::uint64_t seed,
                              const ChaosOracleOptions& opts = {})
{
    return ChaosOracleQ2(H, t, grid_cells, opts).sample(seed);
}

} // namespace hermvas
