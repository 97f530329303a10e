#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "hermvas/asymptotics.hpp"
#include "hermvas/errors.hpp"
#include "hermvas/estimators.hpp"
#include "hermvas/hermite_sim.hpp"
#include "hermvas/rng.hpp"
#include "hermvas/stats.hpp"
#include "hermvas/vasicek.hpp"

namespace hermvas {

enum class Experiment { consistency, rate, distribution, gt_converge };

inline std::string_view to_string(Experiment e) noexcept
{
    switch (e) {
    case Experiment::consistency: return "consistency";
    case Experiment::rate: return "rate";
    case Experiment::distribution: return "distribution";
    case Experiment::gt_converge: return "gt-converge";
    }
    return "?";
}

inline Experiment parse_experiment(std::string_view s)
{
    if (s == "consistency") return Experiment::consistency;
    if (s == "rate") return Experiment::rate;
    if (s == "distribution") return Experiment::distribution;
    if (s == "gt-converge") return Experiment::gt_converge;
    throw ParameterError("unknown experiment '" + std::string(s) + "'");
}

struct MCConfig {
    HermiteSpec spec{1, 0.6};
    VasicekParams params{1.0, 2.0};
    std::vector<double> horizons{100.0, 200.0, 400.0, 800.0, 1600.0};
    double dt = 0.05;
    std::size_t replications = 200;
    std::uint64_t master_seed = 20240101;
    Experiment experiment = Experiment::consistency;
    /// Internal fGn points per output step for q >= 2 drivers.
    std::size_t refinement = 32;
    /// Multiplies the driver; 0 gives a noiseless path.
    double noise_scale = 1.0;
    /// Distribution experiment: fail instead of skipping when the a-limit has no CDF target.
    bool require_ks = false;

    void validate() const
    {
        detail::require(!horizons.empty(), "MCConfig: horizons must be nonempty");
        for (std::size_t i = 0; i < horizons.size(); ++i) {
            detail::require(horizons[i] > 0.0, "MCConfig: horizons must be positive");
            if (i > 0) detail::require(horizons[i] > horizons[i - 1], "MCConfig: horizons must increase");
        }
        detail::require(replications >= 2, "MCConfig: need at least two replications");
        detail::require(dt > 0.0, "MCConfig: dt must be positive");
        detail::require(params.a > 0.0, "MCConfig: a must be positive");
        detail::require(refinement >= 1, "MCConfig: refinement must be >= 1");
    }

    friend bool operator==(const MCConfig&, const MCConfig&) = default;
};

/// Seed of replication r at horizon index h.
inline std::uint64_t replication_seed(std::uint64_t master, std::size_t horizon_index, std::size_t replication)
{
    return rng::derive_seed(master, {horizon_index, replication});
}

/// One line of the per-replication table.
struct RawRow {
    double horizon = 0.0;
    std::size_t replication = 0;
    std::uint64_t seed = 0;
    double a_hat = std::numeric_limits<double>::quiet_NaN();
    double b_hat = 0.0;
    double alpha_T = 0.0;
    bool excluded = false;

    friend bool operator==(const RawRow& x, const RawRow& y)
    {
        auto same = [](double u, double v) { return u == v || (std::isnan(u) && std::isnan(v)); };
        return x.horizon == y.horizon && x.replication == y.replication && x.seed == y.seed &&
               same(x.a_hat, y.a_hat) && x.b_hat == y.b_hat && x.alpha_T == y.alpha_T &&
               x.excluded == y.excluded;
    }
};

struct GtRawRow {
    double horizon = 0.0;
    std::size_t replication = 0;
    std::uint64_t seed = 0;
    double g_T = 0.0;

    friend bool operator==(const GtRawRow&, const GtRawRow&) = default;
};

struct ComponentSummary {
    double mean_error = 0.0;
    double mean_abs_error = 0.0;
    double sd = 0.0;
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
    /// sd times the normalizer of the limit theorem at this horizon.
    double normalized_sd = 0.0;
    /// KS distance of the standardized errors to N(0,1); NaN when not applicable.
    double ks = std::numeric_limits<double>::quiet_NaN();
};

struct HorizonSummary {
    double horizon = 0.0;
    std::size_t used = 0;
    std::size_t excluded = 0;
    ComponentSummary a;
    ComponentSummary b;
    double correlation = 0.0;
};

struct GtSummary {
    double horizon = 0.0;
    std::size_t samples = 0;
    double mean = 0.0;
    double mean_standard_error = 0.0;
    double variance = 0.0;
    double variance_standard_error = 0.0;
    double skewness = 0.0;
    /// Var(G_T) / B_{H,q}^2.
    double variance_ratio = 0.0;
    /// |Var(G_T) - Var(G_prev)| / Var(G_prev); NaN for the first horizon.
    double relative_variance_change = std::numeric_limits<double>::quiet_NaN();
};

struct RateFit {
    stats::LogLogFit a;
    stats::LogLogFit b;
    double expected_a_slope;
    double expected_b_slope;
};

struct MCResult {
    MCConfig config;
    std::vector<RawRow> raw;
    std::vector<GtRawRow> gt_raw;
    std::vector<HorizonSummary> rows;
    std::vector<GtSummary> gt_rows;
    std::optional<RateFit> rate_fit;
    std::vector<std::string> warnings;
    double wall_seconds = 0.0;
};

struct RunOptions {
    /// 0 selects std::thread::hardware_concurrency().
    std::size_t workers = 0;
};

namespace detail {

/// Calls job(i) for i in [0, count) on a pool; the first exception is rethrown.
template <class Job>
void parallel_for(std::size_t count, std::size_t workers, Job&& job)
{
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, std::max<std::size_t>(count, 1));
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                job(i);
            } catch (...) {
                std::scoped_lock lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(count);
                return;
            }
        }
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);
}

inline std::size_t steps_for(double T, double dt)
{
    const double n = std::round(T / dt);
    if (n < 1.0 || std::abs(n * dt - T) > 1e-9 * T) {
        throw ParameterError("horizon " + std::to_string(T) + " is not a multiple of dt " + std::to_string(dt));
    }
    return static_cast<std::size_t>(n);
}

inline RawRow run_replication(const MCConfig& cfg, std::size_t h, std::size_t r)
{
    const double T = cfg.horizons[h];
    const GridSpec grid(T, steps_for(T, cfg.dt));
    RawRow row;
    row.horizon = T;
    row.replication = r;
    row.seed = replication_seed(cfg.master_seed, h, r);

    auto z = simulate_hermite(cfg.spec, grid, row.seed, {cfg.refinement});
    if (cfg.noise_scale != 1.0) {
        for (double& v : z.values) v *= cfg.noise_scale;
    }
    const auto x = vasicek_path(cfg.params, z);
    const auto est = estimate(x, cfg.spec);
    row.b_hat = est.b_hat;
    row.alpha_T = est.alpha_T;
    row.excluded = est.degenerate();
    if (!row.excluded) row.a_hat = *est.a_hat;
    return row;
}

inline std::vector<RawRow> run_raw(const MCConfig& cfg, const RunOptions& opts)
{
    const std::size_t per = cfg.replications;
    std::vector<RawRow> raw(cfg.horizons.size() * per);
    parallel_for(raw.size(), opts.workers, [&](std::size_t i) { raw[i] = run_replication(cfg, i / per, i % per); });
    return raw;
}

inline ComponentSummary summarize_component(std::span<const double> errors, double normalizer)
{
    ComponentSummary s;
    if (errors.empty()) {
        s.mean_error = s.mean_abs_error = s.sd = s.skewness = s.excess_kurtosis = s.normalized_sd =
            std::numeric_limits<double>::quiet_NaN();
        return s;
    }
    s.mean_error = stats::mean(errors);
    double abs_sum = 0.0;
    for (double e : errors) abs_sum += std::abs(e);
    s.mean_abs_error = abs_sum / static_cast<double>(errors.size());
    s.sd = stats::stddev(errors);
    s.skewness = stats::skewness(errors);
    s.excess_kurtosis = stats::excess_kurtosis(errors);
    s.normalized_sd = s.sd * normalizer;
    return s;
}

} // namespace detail

/**
 * Per-horizon statistics from the raw table. A pure function of (raw, config):
 * rows are regrouped by horizon and ordered by replication before any
 * floating-point reduction, so the result does not depend on row order.
 */
inline std::vector<HorizonSummary> summarize(std::vector<RawRow> raw, const MCConfig& cfg)
{
    std::sort(raw.begin(), raw.end(), [](const RawRow& x, const RawRow& y) {
        return x.horizon != y.horizon ? x.horizon < y.horizon : x.replication < y.replication;
    });
    const auto law = fluctuation_law(cfg.spec, cfg.params.a);
    const bool dist = cfg.experiment == Experiment::distribution;

    std::vector<HorizonSummary> out;
    for (double T : cfg.horizons) {
        HorizonSummary s;
        s.horizon = T;
        std::vector<double> ea;
        std::vector<double> eb;
        for (const auto& row : raw) {
            if (row.horizon != T) continue;
            if (row.excluded) {
                ++s.excluded;
                continue;
            }
            ea.push_back(row.a_hat - cfg.params.a);
            eb.push_back(row.b_hat - cfg.params.b);
        }
        s.used = ea.size();
        s.a = detail::summarize_component(ea, law.a_normalizer(T));
        s.b = detail::summarize_component(eb, law.b_normalizer(T));
        s.correlation = ea.size() >= 2 ? stats::correlation(ea, eb) : std::numeric_limits<double>::quiet_NaN();

        if (dist && ea.size() >= 2) {
            if (law.a_limit.kind == LimitKind::Gaussian) {
                std::vector<double> z(ea.size());
                const double k = law.a_normalizer(T) / law.a_limit.scale;
                for (std::size_t i = 0; i < z.size(); ++i) z[i] = k * ea[i];
                s.a.ks = stats::ks_normal(z);
            }
            if (law.b_limit.kind == LimitKind::Gaussian) {
                std::vector<double> z(eb.size());
                const double k = law.b_normalizer(T) / law.b_limit.scale;
                for (std::size_t i = 0; i < z.size(); ++i) z[i] = k * eb[i];
                s.b.ks = stats::ks_normal(z);
            }
        }
        out.push_back(s);
    }
    return out;
}

/// Slopes of log sd against log T (log(T / log T) for the a-component in the
/// critical case), with the exponents predicted by the limit theorem.
inline RateFit fit_rates(const std::vector<HorizonSummary>& rows, const MCConfig& cfg)
{
    const auto law = fluctuation_law(cfg.spec, cfg.params.a);
    std::vector<std::pair<double, double>> pa;
    std::vector<std::pair<double, double>> pb;
    for (const auto& r : rows) {
        const double x = law.a_rate_log ? r.horizon / std::log(r.horizon) : r.horizon;
        pa.emplace_back(x, r.a.sd);
        pb.emplace_back(r.horizon, r.b.sd);
    }
    return {stats::loglog_fit(pa), stats::loglog_fit(pb), -law.a_rate_exponent, -law.b_rate_exponent};
}

namespace detail {

inline void exclusion_warnings(MCResult& res)
{
    for (const auto& row : res.rows) {
        const double frac = static_cast<double>(row.excluded) / static_cast<double>(row.excluded + row.used);
        if (frac > 0.05) {
            res.warnings.push_back("horizon " + std::to_string(row.horizon) + ": " + std::to_string(row.excluded) +
                                   " replications excluded for degenerate variance (" +
                                   std::to_string(100.0 * frac) + "%)");
        }
    }
}

inline MCResult run_estimator_experiment(const MCConfig& cfg, Experiment expected, const RunOptions& opts)
{
    cfg.validate();
    if (cfg.experiment != expected) {
        throw ParameterError("MCConfig.experiment is '" + std::string(to_string(cfg.experiment)) + "', expected '" +
                             std::string(to_string(expected)) + "'");
    }
    const auto start = std::chrono::steady_clock::now();
    MCResult res;
    res.config = cfg;
    res.raw = run_raw(cfg, opts);
    res.rows = summarize(res.raw, cfg);
    exclusion_warnings(res);
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

} // namespace detail

/// Mean absolute errors of (a_hat, b_hat) per horizon.
inline MCResult run_consistency(const MCConfig& cfg, const RunOptions& opts = {})
{
    auto res = detail::run_estimator_experiment(cfg, Experiment::consistency, opts);
    for (std::size_t i = 1; i < res.rows.size(); ++i) {
        if (!(res.rows[i].a.mean_abs_error < res.rows[i - 1].a.mean_abs_error) ||
            !(res.rows[i].b.mean_abs_error < res.rows[i - 1].b.mean_abs_error)) {
            res.warnings.push_back("mean absolute error does not decrease between horizons " +
                                   std::to_string(res.rows[i - 1].horizon) + " and " +
                                   std::to_string(res.rows[i].horizon));
        }
    }
    return res;
}

/// True when mean |error| strictly decreases across horizons for both estimators.
inline bool errors_decrease(const MCResult& res)
{
    for (std::size_t i = 1; i < res.rows.size(); ++i) {
        if (!(res.rows[i].a.mean_abs_error < res.rows[i - 1].a.mean_abs_error)) return false;
        if (!(res.rows[i].b.mean_abs_error < res.rows[i - 1].b.mean_abs_error)) return false;
    }
    return true;
}

/// Log-log regression of the error standard deviations on the horizon.
inline MCResult run_rate(const MCConfig& cfg, const RunOptions& opts = {})
{
    detail::require(cfg.horizons.size() >= 4, "run_rate: need at least 4 horizons");
    detail::require(cfg.horizons.back() >= 8.0 * cfg.horizons.front(), "run_rate: horizons must span >= 3 octaves");
    auto res = detail::run_estimator_experiment(cfg, Experiment::rate, opts);
    res.rate_fit = fit_rates(res.rows, cfg);
    return res;
}

/// Standardized errors against the limit law; KS distances where the limit is Gaussian.
inline MCResult run_distribution(const MCConfig& cfg, const RunOptions& opts = {})
{
    const auto law = fluctuation_law(cfg.spec, cfg.params.a);
    if (cfg.require_ks && law.a_limit.kind != LimitKind::Gaussian) {
        throw UnsupportedDistributionTarget(
            "run_distribution: the a-limit in case " + std::string(to_string(law.case_id)) +
            " is a Rosenblatt law with no CDF target; only moments and rates are reported");
    }
    auto res = detail::run_estimator_experiment(cfg, Experiment::distribution, opts);
    if (res.rows.size() >= 2) res.rate_fit = fit_rates(res.rows, cfg);
    return res;
}

/// Per-horizon summary of G_T samples from the gt-converge raw table.
inline std::vector<GtSummary> summarize_gt(std::vector<GtRawRow> raw, const MCConfig& cfg)
{
    std::sort(raw.begin(), raw.end(), [](const GtRawRow& x, const GtRawRow& y) {
        return x.horizon != y.horizon ? x.horizon < y.horizon : x.replication < y.replication;
    });
    const double bq = b_constant(cfg.spec);
    std::vector<GtSummary> out;
    for (double T : cfg.horizons) {
        std::vector<double> g;
        for (const auto& row : raw) {
            if (row.horizon == T) g.push_back(row.g_T);
        }
        GtSummary s;
        s.horizon = T;
        s.samples = g.size();
        s.mean = stats::mean(g);
        s.variance = stats::variance(g);
        s.mean_standard_error = std::sqrt(s.variance / static_cast<double>(g.size()));
        s.variance_standard_error = stats::variance_standard_error(g);
        s.skewness = stats::skewness(g);
        s.variance_ratio = s.variance / (bq * bq);
        if (!out.empty()) s.relative_variance_change = std::abs(s.variance - out.back().variance) / out.back().variance;
        out.push_back(s);
    }
    return out;
}

/// Samples of G_T for each horizon T (used as the tilting parameter).
inline MCResult run_gt_converge(const MCConfig& cfg, const RunOptions& opts = {})
{
    cfg.validate();
    if (cfg.experiment != Experiment::gt_converge) throw ParameterError("MCConfig.experiment must be gt-converge");
    detail::require(gt_regime(cfg.spec), "run_gt_converge: requires q >= 2, or q = 1 with H > 3/4");
    const auto start = std::chrono::steady_clock::now();

    MCResult res;
    res.config = cfg;
    const std::size_t per = cfg.replications;
    res.gt_raw.resize(cfg.horizons.size() * per);
    for (std::size_t h = 0; h < cfg.horizons.size(); ++h) {
        const double T = cfg.horizons[h];
        const auto n = static_cast<std::size_t>(std::ceil(static_cast<double>(gt_points_per_layer) * T));
        const GtSampler sampler(cfg.spec, T, GridSpec(1.0, n), {cfg.refinement});
        detail::parallel_for(per, opts.workers, [&](std::size_t r) {
            GtRawRow row;
            row.horizon = T;
            row.replication = r;
            row.seed = replication_seed(cfg.master_seed, h, r);
            row.g_T = sampler.sample(row.seed).g_T;
            res.gt_raw[h * per + r] = row;
        });
    }
    res.gt_rows = summarize_gt(res.gt_raw, cfg);
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

/// Dispatch on cfg.experiment.
inline MCResult run_experiment(const MCConfig& cfg, const RunOptions& opts = {})
{
    switch (cfg.experiment) {
    case Experiment::consistency: return run_consistency(cfg, opts);
    case Experiment::rate: return run_rate(cfg, opts);
    case Experiment::distribution: return run_distribution(cfg, opts);
    case Experiment::gt_converge: return run_gt_converge(cfg, opts);
    }
    throw ParameterError("unknown experiment");
}

} // namespace hermvas
