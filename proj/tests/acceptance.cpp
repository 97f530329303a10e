// Acceptance runner: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "hermvas/hermvas.hpp"
#include "hermvas/io.hpp"
#include "oracles.hpp"

using namespace hermvas;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void check(bool ok, const std::string& what)
    {
        pass = pass && ok;
        if (!detail.empty()) detail += "; ";
        detail += what + (ok ? "" : " [x]");
    }
};

std::string fmt(const char* f, auto... xs)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, xs...);
    return buf;
}

double bootstrap_skewness_se(const std::vector<double>& x, std::uint64_t seed)
{
    std::mt19937_64 gen(seed);
    std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
    std::vector<double> b(x.size());
    std::vector<double> s;
    for (int r = 0; r < 300; ++r) {
        for (double& v : b) v = x[pick(gen)];
        s.push_back(stats::skewness(b));
    }
    return stats::stddev(s);
}

MCConfig base(const HermiteSpec& spec, Experiment e)
{
    MCConfig c;
    c.spec = spec;
    c.params = {1.0, 2.0};
    c.dt = 0.05;
    c.experiment = e;
    return c;
}

// Rate runs over T = 100..1600 with 200 replications, shared by criteria 6 and 7.
const MCResult& rate_run(const HermiteSpec& spec)
{
    static std::vector<std::pair<HermiteSpec, MCResult>> cache;
    for (const auto& [s, r] : cache)
        if (s == spec) return r;
    auto c = base(spec, Experiment::rate);
    c.horizons = {100.0, 200.0, 400.0, 800.0, 1600.0};
    c.replications = 200;
    cache.emplace_back(spec, run_rate(c));
    return cache.back().second;
}

const HorizonSummary& at(const MCResult& r, double T)
{
    for (const auto& row : r.rows)
        if (row.horizon == T) return row;
    throw std::runtime_error("missing horizon");
}

// 1. (2H-1) int int_{R+^2} e^{-(t+s)} |t-s|^{2H-2} = Gamma(2H)
Outcome c1()
{
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    for (double H : {0.6, 0.75, 0.9}) {
        // E[Y_t^2] at a = 1 is H times the double integral over [0,t]^2; t = 200 leaves e^{-200}
        const double lhs = expected_y_squared(1.0, H, 200.0) / H;
        const double err = std::abs(lhs - std::tgamma(2.0 * H));
        o.check(err < 1e-6, fmt("H=%.2f err=%.2e", H, err));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.check(secs < 1.0, fmt("%.3fs", secs));
    return o;
}

// 2. fBm covariance on a 5x5 grid
Outcome c2()
{
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    const double H = 0.7;
    const std::size_t n = 4096;
    const std::size_t paths = 2000;
    const std::vector<std::size_t> idx{820, 1638, 2458, 3277, 4096};
    const GridSpec grid(1.0, n);
    std::vector<std::vector<double>> z(paths);
    for (std::size_t p = 0; p < paths; ++p) {
        const auto path = simulate_fbm(H, grid, 700000 + p);
        for (std::size_t k : idx) z[p].push_back(path.values[k]);
    }
    int worst_i = 0;
    int worst_j = 0;
    double worst = 0.0;
    int bad = 0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        for (std::size_t j = 0; j < idx.size(); ++j) {
            const double s = grid.time(idx[i]);
            const double t = grid.time(idx[j]);
            const double want = 0.5 * (std::pow(s, 2 * H) + std::pow(t, 2 * H) - std::pow(std::abs(t - s), 2 * H));
            std::vector<double> prod(paths);
            for (std::size_t p = 0; p < paths; ++p) prod[p] = z[p][i] * z[p][j];
            const double se = stats::stddev(prod) / std::sqrt(static_cast<double>(paths));
            const double dev = std::abs(stats::mean(prod) - want) / se;
            if (dev > 3.0) ++bad;
            if (dev > worst) {
                worst = dev;
                worst_i = static_cast<int>(i);
                worst_j = static_cast<int>(j);
            }
        }
    }
    o.check(bad == 0, fmt("max deviation %.2f SE at cell (%d,%d), %d cells beyond 3 SE", worst, worst_i, worst_j, bad));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.check(secs < 30.0, fmt("%.1fs", secs));
    return o;
}

// 3. Rosenblatt process variance t^{2H}
Outcome c3()
{
    Outcome o;
    const HermiteSpec spec(2, 0.7);
    const GridSpec grid(1.0, 64);
    std::vector<std::vector<double>> z(3);
    const std::size_t idx[3] = {16, 32, 64};
    for (std::uint64_t p = 0; p < 2000; ++p) {
        const auto path = simulate_hermite(spec, grid, 800000 + p);
        for (int k = 0; k < 3; ++k) z[k].push_back(path.values[idx[k]]);
    }
    for (int k = 0; k < 3; ++k) {
        const double t = grid.time(idx[k]);
        // zero-mean process: second moment estimates the variance
        double m2 = 0.0;
        for (double v : z[k]) m2 += v * v;
        m2 /= static_cast<double>(z[k].size());
        const double ratio = m2 / std::pow(t, 1.4);
        // exact variance of the discrete construction, for reference
        const double exact = partial_sum_variance(spec.h0(), 2, idx[k] * 32) / partial_sum_variance(spec.h0(), 2, 64 * 32) /
                             std::pow(t, 1.4);
        o.check(std::abs(ratio - 1.0) < 0.05, fmt("t=%.2f ratio=%.4f (exact discrete %.4f)", t, ratio, exact));
        if (k == 2) {
            std::vector<double> sq(z[k].size());
            for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = z[k][i] * z[k][i];
            const double se = stats::stddev(sq) / std::sqrt(static_cast<double>(sq.size()));
            o.check(std::abs(ratio - 1.0) < 3.0 * se, fmt("terminal |ratio-1|/SE=%.2f", std::abs(ratio - 1.0) / se));
        }
    }
    return o;
}

// 4. chaos oracle against the partial-sum simulator
Outcome c4()
{
    Outcome o;
    const double H = 0.7;
    const ChaosOracleQ2 oracle(H, 1.0, 6400);
    std::vector<double> x;
    for (std::uint64_t s = 0; s < 5000; ++s) x.push_back(oracle.sample(900000 + s));
    const double var = stats::variance(x);
    double m4 = 0.0;
    const double mx = stats::mean(x);
    for (double v : x) m4 += std::pow(v - mx, 4);
    m4 /= static_cast<double>(x.size());
    const double var_se = std::sqrt((m4 - var * var) / static_cast<double>(x.size()));
    o.check(std::abs(var - 1.0) < 0.1, fmt("oracle variance %.4f (SE %.4f)", var, var_se));
    o.check(oracle.warnings().empty(), "no truncation warning");

    double prev_gap = 1.0;
    bool monotone = true;
    std::string seq;
    for (std::size_t cells : {100u, 200u, 400u, 800u}) {
        const double dv = ChaosOracleQ2(H, 1.0, cells).discrete_variance();
        monotone = monotone && (1.0 - dv) < prev_gap && dv < 1.0;
        prev_gap = 1.0 - dv;
        seq += fmt("%s%.4f", seq.empty() ? "" : ",", dv);
    }
    o.check(monotone, "exact discrete variance under refinement " + seq);

    std::vector<double> y;
    for (std::uint64_t s = 0; s < 5000; ++s) {
        y.push_back(simulate_hermite(HermiteSpec(2, H), GridSpec(1.0, 64), 950000 + s).values.back());
    }
    const double sx = stats::skewness(x);
    const double sy = stats::skewness(y);
    const double se = std::hypot(bootstrap_skewness_se(x, 1), bootstrap_skewness_se(y, 2));
    o.check(sx > 0.0 && sy > 0.0 && std::abs(sx - sy) < 2.0 * se,
            fmt("skewness oracle %.3f simulator %.3f combined SE %.3f", sx, sy, se));
    return o;
}

// 5. path identity int_0^T Y = (Z_T - Y_T)/a for the discrete recursion
Outcome c5()
{
    Outcome o;
    const double T = 10.0;
    const std::size_t n_fine = 20000;
    double worst = 0.0;
    double sum_coarse = 0.0;
    double sum_fine = 0.0;
    for (std::uint64_t s = 0; s < 50; ++s) {
        const auto fine = simulate_fbm(0.7, GridSpec(T, n_fine), 500000 + s);
        std::vector<double> sub(n_fine / 2 + 1);
        for (std::size_t k = 0; k < sub.size(); ++k) sub[k] = fine.values[2 * k];
        const SamplePath coarse(GridSpec(T, n_fine / 2), std::move(sub));
        auto err = [](const SamplePath& z) {
            const auto y = ou_path(1.0, z);
            const double zt = z.values.back();
            return std::abs(integrate_path(y) - (zt - y.values.back())) / (1.0 + std::abs(zt));
        };
        const double ec = err(coarse);
        const double ef = err(fine);
        worst = std::max(worst, ec);
        sum_coarse += ec;
        sum_fine += ef;
    }
    o.check(worst < 1e-2, fmt("max relative error at dt=1e-3: %.2e", worst));
    const double ratio = sum_fine / sum_coarse;
    o.check(std::abs(ratio - 0.5) <= 0.15, fmt("error ratio on halving dt: %.3f (need 0.5 +- 30%%)", ratio));
    return o;
}

// 6. consistency
Outcome c6()
{
    Outcome o;
    for (const auto& [spec, tol] : {std::pair{HermiteSpec(1, 0.6), 0.15}, std::pair{HermiteSpec(2, 0.7), 0.2}}) {
        const auto& r = rate_run(spec);
        const auto& r1 = at(r, 100.0);
        const auto& r2 = at(r, 400.0);
        const auto& r3 = at(r, 1600.0);
        const std::string tag = fmt("q=%d H=%.2f", spec.q(), spec.H());
        o.check(r3.a.mean_abs_error < tol && r3.b.mean_abs_error < tol,
                tag + fmt(" T=1600 mean|a err|=%.4f mean|b err|=%.4f", r3.a.mean_abs_error, r3.b.mean_abs_error));
        o.check(r1.a.mean_abs_error > r2.a.mean_abs_error && r2.a.mean_abs_error > r3.a.mean_abs_error &&
                    r1.b.mean_abs_error > r2.b.mean_abs_error && r2.b.mean_abs_error > r3.b.mean_abs_error,
                tag + fmt(" decreasing a %.4f>%.4f>%.4f b %.4f>%.4f>%.4f", r1.a.mean_abs_error, r2.a.mean_abs_error,
                          r3.a.mean_abs_error, r1.b.mean_abs_error, r2.b.mean_abs_error, r3.b.mean_abs_error));
        o.check(r1.excluded + r2.excluded + r3.excluded == 0, tag + " no exclusions");
    }
    return o;
}

// 7. rates
Outcome c7()
{
    Outcome o;
    for (const auto& [spec, a_slope] : {std::pair{HermiteSpec(1, 0.6), -0.5}, std::pair{HermiteSpec(1, 0.8), -0.4},
                                        std::pair{HermiteSpec(2, 0.7), -0.3}}) {
        const auto& fit = *rate_run(spec).rate_fit;
        const double b_slope = -(1.0 - spec.H());
        o.check(std::abs(fit.a.slope - a_slope) <= 0.15 && std::abs(fit.b.slope - b_slope) <= 0.15,
                fmt("q=%d H=%.2f a slope %.3f (target %.2f) b slope %.3f (target %.2f)", spec.q(), spec.H(),
                    fit.a.slope, a_slope, fit.b.slope, b_slope));
    }
    const auto& crit = rate_run(HermiteSpec(1, 0.75));
    std::vector<double> sd;
    for (double T : {400.0, 800.0, 1600.0}) sd.push_back(at(crit, T).a.sd * std::sqrt(T / std::log(T)));
    const auto [lo, hi] = std::minmax_element(sd.begin(), sd.end());
    o.check(*hi / *lo - 1.0 < 0.25,
            fmt("critical normalized sd %.3f, %.3f, %.3f (spread %.1f%%)", sd[0], sd[1], sd[2], 100.0 * (*hi / *lo - 1.0)));
    return o;
}

MCResult distribution_run(const HermiteSpec& spec)
{
    auto c = base(spec, Experiment::distribution);
    c.horizons = {1600.0};
    c.replications = 500;
    return run_distribution(c);
}

// 8. Gaussian limit, subcritical
Outcome c8()
{
    Outcome o;
    const double H = 0.6;
    const double a = 1.0;
    const double T = 1600.0;
    const auto res = distribution_run(HermiteSpec(1, H));
    const double scale = std::pow(a, 1 + 4 * H) * sigma_h(H) / (2 * H * H * std::tgamma(2 * H));
    std::vector<double> za;
    std::vector<double> zb;
    for (const auto& r : res.raw) {
        if (r.excluded) continue;
        za.push_back(std::sqrt(T) * (r.a_hat - a) / scale);
        zb.push_back(std::pow(T, 1 - H) * (r.b_hat - 2.0) * a);
    }
    const double ka = stats::ks_normal(za);
    const double kb = stats::ks_normal(zb);
    const double rho = stats::correlation(za, zb);
    o.check(ka < 0.08, fmt("KS(a)=%.4f (sd of standardized a %.3f)", ka, stats::stddev(za)));
    o.check(kb < 0.08, fmt("KS(b)=%.4f (sd of standardized b %.3f)", kb, stats::stddev(zb)));
    o.check(std::abs(rho) < 0.1, fmt("corr=%.4f", rho));
    o.check(std::abs(res.rows[0].a.ks - ka) < 1e-12 && std::abs(res.rows[0].b.ks - kb) < 1e-12, "harness KS agrees");
    return o;
}

// 9. critical scale
Outcome c9()
{
    Outcome o;
    const double T = 1600.0;
    const auto res = distribution_run(HermiteSpec(1, 0.75));
    std::vector<double> z;
    for (const auto& r : res.raw)
        if (!r.excluded) z.push_back(std::sqrt(T / std::log(T)) * (r.a_hat - 1.0));
    const double sd = stats::stddev(z);
    const double target = 0.75 / std::sqrt(std::numbers::pi);
    o.check(std::abs(sd / target - 1.0) < 0.2, fmt("sd=%.4f target=%.6f ratio=%.3f", sd, target, sd / target));
    return o;
}

// 10. G_T convergence
Outcome c10()
{
    Outcome o;
    auto c = base(HermiteSpec(2, 0.7), Experiment::gt_converge);
    c.horizons = {5.0, 10.0, 20.0, 40.0};
    c.replications = 1000;
    const auto res = run_gt_converge(c);
    for (const auto& row : res.gt_rows) {
        o.check(std::abs(row.mean) < 3.0 * row.mean_standard_error,
                fmt("T=%g mean %.4f (SE %.4f) var %.3f", row.horizon, row.mean, row.mean_standard_error, row.variance));
    }
    const auto& last = res.gt_rows.back();
    o.check(last.relative_variance_change < 0.2, fmt("relative variance change 20->40 %.3f", last.relative_variance_change));
    o.check(std::abs(last.variance_ratio - 1.0) < 0.25, fmt("Var(G_40)/B^2 = %.3f", last.variance_ratio));
    return o;
}

// 11. sigma_H against nested brute force and under refinement
Outcome c11()
{
    Outcome o;
    for (double H : {0.55, 0.6, 0.7}) {
        const double lib = sigma_h(H);
        const double brute = oracle::sigma_h_3d(H);
        const double refined = sigma_h(H, {2});
        o.check(std::abs(lib - brute) < 1e-3, fmt("H=%.2f reduced %.8f brute %.8f", H, lib, brute));
        o.check(std::abs(refined - lib) < 1e-4, fmt("refinement change %.1e", std::abs(refined - lib)));
    }
    return o;
}

// 12. determinism from a manifest
Outcome c12()
{
    Outcome o;
    const auto dir = std::filesystem::temp_directory_path() / ("hermvas_acceptance_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    std::vector<MCConfig> configs;
    auto rate = base(HermiteSpec(2, 0.7), Experiment::rate);
    rate.horizons = {10.0, 20.0, 40.0, 80.0};
    rate.replications = 16;
    configs.push_back(rate);
    auto gt = base(HermiteSpec(2, 0.7), Experiment::gt_converge);
    gt.horizons = {2.0, 4.0};
    gt.replications = 12;
    configs.push_back(gt);

    for (const auto& cfg : configs) {
        io::RunManifest m;
        m.config = cfg;
        const auto file = dir / "manifest.json";
        io::write_atomically(file, io::manifest_to_json(m).dump(2));
        const auto loaded = io::read_manifest(file).config;
        auto csv = [](const MCResult& r) {
            return r.config.experiment == Experiment::gt_converge ? io::gt_raw_to_csv(r.gt_raw) : io::raw_to_csv(r.raw);
        };
        const auto one = csv(run_experiment(loaded, {1}));
        const auto three = csv(run_experiment(loaded, {3}));
        const auto again = csv(run_experiment(cfg, {2}));
        o.check(loaded == cfg && one == three && one == again,
                std::string(to_string(cfg.experiment)) + fmt(" raw CSV identical across 1/2/3 workers (%zu bytes)", one.size()));
    }
    std::filesystem::remove_all(dir);
    return o;
}

} // namespace

int main(int argc, char** argv)
{
    const std::vector<std::function<Outcome()>> criteria{c1, c2, c3, c4, c5, c6, c7, c8, c9, c10, c11, c12};
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && !only.contains(id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i]();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s criterion %d: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, o.detail.c_str(), secs);
        std::fflush(stdout);
        if (!o.pass) ++failed;
    }
    std::printf("%d criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}
