#pragma once

#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hermvas/asymptotics.hpp"
#include "hermvas/errors.hpp"
#include "hermvas/hermite_sim.hpp"
#include "hermvas/mc_harness.hpp"

namespace hermvas::io {

inline constexpr std::string_view tool_version = "0.1.0";

// ---------------------------------------------------------------------------
// numbers

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double x)
{
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return {buf, r.ptr};
}

inline double parse_double(std::string_view s, const std::string& where)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size()) {
        throw FormatError(where + ": cannot parse number '" + std::string(s) + "'");
    }
    return v;
}

inline std::uint64_t parse_u64(std::string_view s, const std::string& where)
{
    std::uint64_t v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size()) {
        throw FormatError(where + ": cannot parse integer '" + std::string(s) + "'");
    }
    return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos) return out;
        start = pos + 1;
    }
}

// ---------------------------------------------------------------------------
// files

/// Writes to `file.tmp` and renames over `file`.
inline void write_atomically(const std::filesystem::path& file, const std::string& content)
{
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    auto tmp = file;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FormatError("cannot open " + tmp.string() + " for writing");
        out << content;
        out.flush();
        if (!out) throw FormatError("write to " + tmp.string() + " failed");
    }
    std::filesystem::rename(tmp, file);
}

inline std::string read_file(const std::filesystem::path& file)
{
    std::ifstream in(file, std::ios::binary);
    if (!in) throw FormatError("cannot open " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Default experiment output directory, overridable with HERMVAS_OUTPUT_DIR.
inline std::filesystem::path default_output_dir()
{
    if (const char* env = std::getenv("HERMVAS_OUTPUT_DIR"); env && *env) return env;
    return "hermvas-out";
}

// ---------------------------------------------------------------------------
// path CSV

inline std::string path_to_csv(const SamplePath& path)
{
    std::string s = "t,value\n";
    for (std::size_t k = 0; k < path.values.size(); ++k) {
        s += format_double(path.grid.time(k));
        s += ',';
        s += format_double(path.values[k]);
        s += '\n';
    }
    return s;
}

inline void write_path_csv(const SamplePath& path, const std::filesystem::path& file)
{
    write_atomically(file, path_to_csv(path));
}

/// Parses `t,value` rows; t must start at 0 and be uniform. Errors give line numbers.
inline SamplePath path_from_csv(std::string_view text, const std::string& name = "path CSV")
{
    std::vector<double> t;
    std::vector<double> v;
    std::size_t line_no = 0;
    bool header = false;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        const auto cols = split(line, ',');
        const std::string where = name + " line " + std::to_string(line_no);
        if (!header) {
            if (cols.size() != 2 || cols[0] != "t" || cols[1] != "value") {
                throw FormatError(where + ": expected header 't,value'");
            }
            header = true;
            continue;
        }
        if (cols.size() != 2) {
            throw FormatError(where + ": expected 2 columns, found " + std::to_string(cols.size()));
        }
        t.push_back(parse_double(cols[0], where));
        v.push_back(parse_double(cols[1], where));
    }
    if (!header) throw FormatError(name + ": missing header");
    if (t.size() < 2) throw FormatError(name + ": need at least two data rows");
    if (t.front() != 0.0) throw FormatError(name + " data row 1: grid must start at t = 0");

    const GridSpec grid(t.back(), t.size() - 1);
    const double tol = 1e-9 * grid.T;
    for (std::size_t k = 1; k < t.size(); ++k) {
        if (!(std::abs(t[k] - grid.time(k)) <= tol)) {
            throw FormatError(name + " data row " + std::to_string(k + 1) + " (t = " + format_double(t[k]) +
                              "): grid is not uniform");
        }
    }
    return SamplePath(grid, std::move(v));
}

inline SamplePath read_path_csv(const std::filesystem::path& file)
{
    return path_from_csv(read_file(file), file.string());
}

// ---------------------------------------------------------------------------
// MCConfig: flat key=value text and JSON

inline std::string join_doubles(const std::vector<double>& xs)
{
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) s += ',';
        s += format_double(xs[i]);
    }
    return s;
}

inline std::vector<double> parse_double_list(std::string_view s, const std::string& where)
{
    std::vector<double> out;
    for (auto part : split(s, ',')) out.push_back(parse_double(part, where));
    return out;
}

inline bool parse_bool(std::string_view s, const std::string& where)
{
    if (s == "1" || s == "true") return true;
    if (s == "0" || s == "false") return false;
    throw FormatError(where + ": expected a boolean, got '" + std::string(s) + "'");
}

/// Applies one key=value setting to `cfg`. Unknown keys are format errors.
inline void apply_setting(MCConfig& cfg, std::string_view key, std::string_view value, const std::string& where)
{
    if (key == "q") {
        cfg.spec = HermiteSpec(static_cast<int>(parse_u64(value, where)), cfg.spec.H());
    } else if (key == "H") {
        cfg.spec = HermiteSpec(cfg.spec.q(), parse_double(value, where));
    } else if (key == "a") {
        cfg.params.a = parse_double(value, where);
    } else if (key == "b") {
        cfg.params.b = parse_double(value, where);
    } else if (key == "horizons") {
        cfg.horizons = parse_double_list(value, where);
    } else if (key == "dt") {
        cfg.dt = parse_double(value, where);
    } else if (key == "replications") {
        cfg.replications = parse_u64(value, where);
    } else if (key == "master_seed" || key == "seed") {
        cfg.master_seed = parse_u64(value, where);
    } else if (key == "experiment") {
        cfg.experiment = parse_experiment(value);
    } else if (key == "refinement") {
        cfg.refinement = parse_u64(value, where);
    } else if (key == "noise_scale") {
        cfg.noise_scale = parse_double(value, where);
    } else if (key == "require_ks") {
        cfg.require_ks = parse_bool(value, where);
    } else {
        throw FormatError(where + ": unknown key '" + std::string(key) + "'");
    }
}

/// Flat config: `key = value` per line, `#` starts a comment.
inline MCConfig parse_config_text(std::string_view text, MCConfig cfg = {}, const std::string& name = "config")
{
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string line(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto eq = line.find('=');
        const std::string where = name + " line " + std::to_string(line_no);
        if (eq == std::string::npos) throw FormatError(where + ": expected key = value");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        apply_setting(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), where);
    }
    return cfg;
}

inline std::string config_to_text(const MCConfig& cfg)
{
    std::ostringstream s;
    s << "experiment = " << to_string(cfg.experiment) << '\n'
      << "q = " << cfg.spec.q() << '\n'
      << "H = " << format_double(cfg.spec.H()) << '\n'
      << "a = " << format_double(cfg.params.a) << '\n'
      << "b = " << format_double(cfg.params.b) << '\n'
      << "horizons = " << join_doubles(cfg.horizons) << '\n'
      << "dt = " << format_double(cfg.dt) << '\n'
      << "replications = " << cfg.replications << '\n'
      << "master_seed = " << cfg.master_seed << '\n'
      << "refinement = " << cfg.refinement << '\n'
      << "noise_scale = " << format_double(cfg.noise_scale) << '\n'
      << "require_ks = " << (cfg.require_ks ? "true" : "false") << '\n';
    return s.str();
}

inline nlohmann::json config_to_json(const MCConfig& cfg)
{
    return {
        {"experiment", std::string(to_string(cfg.experiment))},
        {"q", cfg.spec.q()},
        {"H", cfg.spec.H()},
        {"a", cfg.params.a},
        {"b", cfg.params.b},
        {"horizons", cfg.horizons},
        {"dt", cfg.dt},
        {"replications", cfg.replications},
        {"master_seed", cfg.master_seed},
        {"refinement", cfg.refinement},
        {"noise_scale", cfg.noise_scale},
        {"require_ks", cfg.require_ks},
    };
}

inline MCConfig config_from_json(const nlohmann::json& j)
{
    try {
        MCConfig cfg;
        cfg.experiment = parse_experiment(j.at("experiment").get<std::string>());
        cfg.spec = HermiteSpec(j.at("q").get<int>(), j.at("H").get<double>());
        cfg.params = {j.at("a").get<double>(), j.at("b").get<double>()};
        cfg.horizons = j.at("horizons").get<std::vector<double>>();
        cfg.dt = j.at("dt").get<double>();
        cfg.replications = j.at("replications").get<std::size_t>();
        cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
        cfg.refinement = j.value("refinement", std::size_t{32});
        cfg.noise_scale = j.value("noise_scale", 1.0);
        cfg.require_ks = j.value("require_ks", false);
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("config JSON: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// manifest

struct RunManifest {
    std::string version{tool_version};
    MCConfig config;
    std::string started;
    std::string finished;
    std::vector<std::string> warnings;
};

inline std::string utc_timestamp(std::chrono::system_clock::time_point tp = std::chrono::system_clock::now())
{
    const std::time_t t = std::chrono::system_clock::to_time_t(tp);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream s;
    s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return s.str();
}

inline nlohmann::json manifest_to_json(const RunManifest& m)
{
    return {
        {"version", m.version},
        {"config", config_to_json(m.config)},
        {"master_seed", m.config.master_seed},
        {"started", m.started},
        {"finished", m.finished},
        {"warnings", m.warnings},
    };
}

inline RunManifest manifest_from_json(const nlohmann::json& j)
{
    try {
        RunManifest m;
        m.version = j.at("version").get<std::string>();
        m.config = config_from_json(j.at("config"));
        m.started = j.value("started", "");
        m.finished = j.value("finished", "");
        m.warnings = j.value("warnings", std::vector<std::string>{});
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("manifest: ") + e.what());
    }
}

inline RunManifest read_manifest(const std::filesystem::path& file)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(file));
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(file.string() + ": " + e.what());
    }
    return manifest_from_json(j);
}

// ---------------------------------------------------------------------------
// experiment tables

inline constexpr std::string_view raw_header = "horizon,replication,seed,a_hat,b_hat,alpha_T,excluded";
inline constexpr std::string_view gt_raw_header = "horizon,replication,seed,g_T";

inline std::string raw_to_csv(const std::vector<RawRow>& rows)
{
    std::string s(raw_header);
    s += '\n';
    for (const auto& r : rows) {
        s += format_double(r.horizon) + ',' + std::to_string(r.replication) + ',' + std::to_string(r.seed) + ',' +
             format_double(r.a_hat) + ',' + format_double(r.b_hat) + ',' + format_double(r.alpha_T) + ',' +
             (r.excluded ? "1" : "0") + '\n';
    }
    return s;
}

inline std::vector<RawRow> raw_from_csv(std::string_view text, const std::string& name = "raw CSV")
{
    std::vector<RawRow> rows;
    std::size_t line_no = 0;
    bool header = false;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (line.empty()) continue;
        const std::string where = name + " line " + std::to_string(line_no);
        if (!header) {
            if (line != raw_header) throw FormatError(where + ": unexpected header");
            header = true;
            continue;
        }
        const auto c = split(line, ',');
        if (c.size() != 7) throw FormatError(where + ": expected 7 columns, found " + std::to_string(c.size()));
        RawRow r;
        r.horizon = parse_double(c[0], where);
        r.replication = parse_u64(c[1], where);
        r.seed = parse_u64(c[2], where);
        r.a_hat = parse_double(c[3], where);
        r.b_hat = parse_double(c[4], where);
        r.alpha_T = parse_double(c[5], where);
        r.excluded = parse_bool(c[6], where);
        rows.push_back(r);
    }
    return rows;
}

inline std::string gt_raw_to_csv(const std::vector<GtRawRow>& rows)
{
    std::string s(gt_raw_header);
    s += '\n';
    for (const auto& r : rows) {
        s += format_double(r.horizon) + ',' + std::to_string(r.replication) + ',' + std::to_string(r.seed) + ',' +
             format_double(r.g_T) + '\n';
    }
    return s;
}

inline std::string summary_to_csv(const std::vector<HorizonSummary>& rows)
{
    std::string s = "horizon,used,excluded,"
                    "a_mean_err,a_mean_abs_err,a_sd,a_skew,a_exkurt,a_norm_sd,a_ks,"
                    "b_mean_err,b_mean_abs_err,b_sd,b_skew,b_exkurt,b_norm_sd,b_ks,corr_ab\n";
    auto comp = [](const ComponentSummary& c) {
        return format_double(c.mean_error) + ',' + format_double(c.mean_abs_error) + ',' + format_double(c.sd) + ',' +
               format_double(c.skewness) + ',' + format_double(c.excess_kurtosis) + ',' +
               format_double(c.normalized_sd) + ',' + format_double(c.ks);
    };
    for (const auto& r : rows) {
        s += format_double(r.horizon) + ',' + std::to_string(r.used) + ',' + std::to_string(r.excluded) + ',' +
             comp(r.a) + ',' + comp(r.b) + ',' + format_double(r.correlation) + '\n';
    }
    return s;
}

inline std::string gt_summary_to_csv(const std::vector<GtSummary>& rows)
{
    std::string s = "horizon,samples,mean,mean_se,variance,variance_se,skewness,variance_ratio,rel_variance_change\n";
    for (const auto& r : rows) {
        s += format_double(r.horizon) + ',' + std::to_string(r.samples) + ',' + format_double(r.mean) + ',' +
             format_double(r.mean_standard_error) + ',' + format_double(r.variance) + ',' +
             format_double(r.variance_standard_error) + ',' + format_double(r.skewness) + ',' +
             format_double(r.variance_ratio) + ',' + format_double(r.relative_variance_change) + '\n';
    }
    return s;
}

inline std::string plot_to_csv(const std::vector<HorizonSummary>& rows)
{
    std::string s = "logT,log_sd_a,log_sd_b\n";
    for (const auto& r : rows) {
        s += format_double(std::log(r.horizon)) + ',' + format_double(std::log(r.a.sd)) + ',' +
             format_double(std::log(r.b.sd)) + '\n';
    }
    return s;
}

inline nlohmann::json rate_fit_to_json(const RateFit& f)
{
    return {
        {"a", {{"slope", f.a.slope}, {"intercept", f.a.intercept}, {"r2", f.a.r2}}},
        {"b", {{"slope", f.b.slope}, {"intercept", f.b.intercept}, {"r2", f.b.r2}}},
        {"expected_a_slope", f.expected_a_slope},
        {"expected_b_slope", f.expected_b_slope},
    };
}

/// Writes manifest.json, raw.csv, summary.csv, plus plot.csv and rate_fit.json
/// for rate and distribution runs. Every file is written atomically.
inline void write_experiment(const std::filesystem::path& dir, const MCResult& res, const RunManifest& manifest)
{
    std::filesystem::create_directories(dir);
    if (res.config.experiment == Experiment::gt_converge) {
        write_atomically(dir / "raw.csv", gt_raw_to_csv(res.gt_raw));
        write_atomically(dir / "summary.csv", gt_summary_to_csv(res.gt_rows));
    } else {
        write_atomically(dir / "raw.csv", raw_to_csv(res.raw));
        write_atomically(dir / "summary.csv", summary_to_csv(res.rows));
        if (res.config.experiment == Experiment::rate || res.config.experiment == Experiment::distribution) {
            write_atomically(dir / "plot.csv", plot_to_csv(res.rows));
        }
        if (res.rate_fit) write_atomically(dir / "rate_fit.json", rate_fit_to_json(*res.rate_fit).dump(2) + '\n');
    }
    write_atomically(dir / "manifest.json", manifest_to_json(manifest).dump(2) + '\n');
}

// ---------------------------------------------------------------------------
// constants record

inline nlohmann::json limit_to_json(const LimitDescriptor& d)
{
    return {
        {"kind", std::string(to_string(d.kind))}, {"scale", d.scale},
        {"sign", d.sign},
        {"index", d.index},
        {"order", d.order},
        {"coefficient", d.coefficient},
        {"rosenblatt_scale", d.rosenblatt_scale},
        {"fbm_square_correction", d.fbm_square_correction},
    };
}

/// H0, c(H,q), B_{H,q} (null outside its regime), H Gamma(2H), sigma_H
/// (null outside 1/2 < H < 3/4) and the fluctuation law.
inline nlohmann::json constants_to_json(const HermiteSpec& spec, double a)
{
    nlohmann::json j;
    j["q"] = spec.q();
    j["H"] = spec.H();
    j["a"] = a;
    j["H0"] = spec.h0();
    j["c"] = spec.c();
    j["H_gamma_2H"] = spec.H() * std::tgamma(2.0 * spec.H());
    j["B"] = gt_regime(spec) ? nlohmann::json(b_constant(spec)) : nlohmann::json(nullptr);
    j["sigma_H"] = (spec.q() == 1 && spec.H() < 0.75) ? nlohmann::json(sigma_h(spec.H())) : nlohmann::json(nullptr);
    const auto law = fluctuation_law(spec, a);
    j["fluctuation_law"] = {
        {"case", std::string(to_string(law.case_id))},
        {"a_rate_exponent", law.a_rate_exponent},
        {"a_rate_log", law.a_rate_log},
        {"b_rate_exponent", law.b_rate_exponent},
        {"a_limit", limit_to_json(law.a_limit)},
        {"b_limit", limit_to_json(law.b_limit)},
        {"components_independent", law.components_independent},
    };
    return j;
}

inline nlohmann::json estimate_to_json(const EstimateResult& r)
{
    nlohmann::json j{{"T", r.T}, {"alpha_T", r.alpha_T}, {"b_hat", r.b_hat}};
    j["a_hat"] = r.a_hat ? nlohmann::json(*r.a_hat) : nlohmann::json(nullptr);
    if (r.degenerate()) j["error"] = "DegenerateVariance";
    return j;
}

} // namespace hermvas::io
