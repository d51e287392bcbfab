#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "reactive_rx/analytic.hpp"
#include "reactive_rx/errors.hpp"
#include "reactive_rx/oracle.hpp"
#include "reactive_rx/params.hpp"
#include "reactive_rx/sim.hpp"

namespace rrx::harness {

inline constexpr const char* kVersion = "0.1.0";

using analytic::SignalSeries;

// ---------------------------------------------------------------------------
// Series helpers
// ---------------------------------------------------------------------------

/// n log-spaced time points in [t_lo, t_hi].
inline std::vector<double> log_grid(double t_lo, double t_hi, int n = 200) {
    if (!(t_lo > 0.0) || !(t_hi > t_lo) || n < 2)
        throw ConfigError("log_grid: need 0 < t_lo < t_hi and n >= 2");
    std::vector<double> g(n);
    const double l0 = std::log(t_lo), dl = (std::log(t_hi) - l0) / (n - 1);
    for (int i = 0; i < n; ++i) g[i] = std::exp(l0 + i * dl);
    g.front() = t_lo;
    g.back() = t_hi;
    return g;
}

/// Channel impulse response as a probability series: closed form where the
/// cubic roots are distinct, numerical Laplace inversion otherwise.
inline SignalSeries impulse_series(const std::vector<double>& grid,
                                   const ChannelParams& p) {
    SignalSeries out;
    out.times = grid;
    out.values.reserve(grid.size());
    try {
        const auto rt = analytic::solve_roots(p);
        for (double t : grid)
            out.values.push_back(analytic::impulse_response(t, p, rt));
    } catch (const DegenerateRootsError&) {
        out.values.clear();
        for (double t : grid)
            out.values.push_back(oracle::impulse_response_via_oracle(t, p));
    }
    out.validate(1.0);
    return out;
}

/// Expected received signal N_C(t) with the same fallback behavior.
inline SignalSeries expected_series(const std::vector<double>& grid,
                                    const ChannelParams& p) {
    SignalSeries s = impulse_series(grid, p);
    for (auto& v : s.values) v *= p.n_a();
    return s;
}

/// Oracle-only series (always numerical inversion).
inline SignalSeries oracle_series(const std::vector<double>& grid,
                                  const ChannelParams& p, bool scale_to_na) {
    SignalSeries out;
    out.times = grid;
    for (double t : grid)
        out.values.push_back(oracle::impulse_response_via_oracle(t, p) *
                             (scale_to_na ? p.n_a() : 1.0));
    out.validate(scale_to_na ? std::max(p.n_a(), 1.0) : 1.0);
    return out;
}

// ---------------------------------------------------------------------------
// Comparison
// ---------------------------------------------------------------------------

struct DeviationReport {
    std::vector<double> deviation;      // a - b per point
    std::vector<double> se_units;       // deviation / stderr where available
    double max_abs_rel = 0.0;           // over points with b > 1% of max(b)
    double mean_abs_rel = 0.0;
    double frac_within_3p5_se = 1.0;    // over points with stderr available
};

inline DeviationReport compare_series(const SignalSeries& a,
                                      const SignalSeries& b) {
    if (a.times != b.times)
        throw GridMismatchError("compare_series: time grids differ");
    DeviationReport rep;
    const std::size_t n = a.times.size();
    rep.deviation.resize(n);
    const std::vector<double>* se = nullptr;
    if (!b.stderr_.empty()) se = &b.stderr_;
    else if (!a.stderr_.empty()) se = &a.stderr_;
    double vmax = 0.0;
    for (double v : b.values) vmax = std::max(vmax, std::abs(v));
    std::size_t n_rel = 0, n_se = 0, n_se_ok = 0;
    for (std::size_t i = 0; i < n; ++i) {
        rep.deviation[i] = a.values[i] - b.values[i];
        if (se) {
            const double s = (*se)[i];
            rep.se_units.push_back(s > 0.0 ? rep.deviation[i] / s : 0.0);
            ++n_se;
            if (std::abs(rep.se_units.back()) <= 3.5) ++n_se_ok;
        }
        if (std::abs(b.values[i]) > 0.01 * vmax && vmax > 0.0) {
            const double rel = std::abs(rep.deviation[i] / b.values[i]);
            rep.max_abs_rel = std::max(rep.max_abs_rel, rel);
            rep.mean_abs_rel += rel;
            ++n_rel;
        }
    }
    if (n_rel > 0) rep.mean_abs_rel /= static_cast<double>(n_rel);
    if (n_se > 0) rep.frac_within_3p5_se = double(n_se_ok) / double(n_se);
    return rep;
}

/// Fraction of points with reference value above `floor_value` whose Monte
/// Carlo mean lies within max(3.5 SE, rel_tol * reference) of the reference.
inline double agreement_fraction(const SignalSeries& ref, const SignalSeries& mc,
                                 double floor_value, double rel_tol = 0.05) {
    if (ref.times != mc.times)
        throw GridMismatchError("agreement_fraction: time grids differ");
    if (mc.stderr_.size() != mc.times.size())
        throw DomainError("agreement_fraction: Monte Carlo series lacks stderr");
    std::size_t n = 0, ok = 0;
    for (std::size_t i = 0; i < ref.times.size(); ++i) {
        if (!(ref.values[i] > floor_value)) continue;
        ++n;
        const double band =
            std::max(3.5 * mc.stderr_[i], rel_tol * std::abs(ref.values[i]));
        if (std::abs(mc.values[i] - ref.values[i]) <= band) ++ok;
    }
    return n == 0 ? 1.0 : static_cast<double>(ok) / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// CSV (schema: t_s,value,stderr; stderr empty for deterministic series)
// ---------------------------------------------------------------------------

inline std::string format_g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_csv(const std::filesystem::path& path,
                      const SignalSeries& s) {
    std::ofstream os(path, std::ios::binary);  // LF line endings everywhere
    if (!os) throw IoError("write_csv: cannot open " + path.string());
    os << "t_s,value,stderr\n";
    for (std::size_t i = 0; i < s.times.size(); ++i) {
        os << format_g17(s.times[i]) << ',' << format_g17(s.values[i]) << ',';
        if (!s.stderr_.empty()) os << format_g17(s.stderr_[i]);
        os << '\n';
    }
    if (!os) throw IoError("write_csv: write failed for " + path.string());
}

inline SignalSeries read_csv(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("read_csv: cannot open " + path.string());
    std::string line;
    if (!std::getline(is, line) || line.rfind("t_s,value,stderr", 0) != 0)
        throw IoError("read_csv: bad header in " + path.string());
    SignalSeries s;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw IoError("read_csv: malformed row in " + path.string());
        s.times.push_back(std::stod(line.substr(0, c1)));
        s.values.push_back(std::stod(line.substr(c1 + 1, c2 - c1 - 1)));
        const std::string tail = line.substr(c2 + 1);
        if (!tail.empty()) s.stderr_.push_back(std::stod(tail));
    }
    return s;
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

struct ExperimentSpec {
    ChannelParams params;
    std::optional<sim::SimConfig> sim_cfg;
    std::string sweep_key;            // "k_b_per_s", "k_d_per_s" or empty
    std::vector<double> sweep_values; // empty => single-point run
    std::vector<std::string> modes;   // analytic, simulate, oracle, compare
    std::filesystem::path out_dir = "out";
    std::vector<double> grid;         // time grid for analytic/oracle modes
    unsigned jobs = 1;
    bool strict = false;
};

namespace detail {

inline std::map<std::string, std::string> parse_kv(std::istream& is) {
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string()
                                          : s.substr(b, e - b + 1);
        };
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected key = value");
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

inline double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": bad number '" + v + "'");
    }
}

inline std::vector<double> to_list(const std::string& key,
                                   const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(to_double(key, item));
    return out;
}

inline std::vector<std::string> split_names(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

} // namespace detail

/// Parses the flat key-value experiment format.  Lengths carry a _um suffix
/// in the file and are converted to meters here; everything downstream is SI.
inline ExperimentSpec parse_spec(std::istream& is) {
    auto kv = detail::parse_kv(is);
    auto take = [&](const char* key) -> std::optional<std::string> {
        auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        std::string v = it->second;
        kv.erase(it);
        return v;
    };
    auto require = [&](const char* key) {
        auto v = take(key);
        if (!v) throw ConfigError(std::string("config: missing key ") + key);
        return *v;
    };

    const double a = detail::to_double("params.a_um", require("params.a_um")) * 1e-6;
    const double r0 = detail::to_double("params.r0_um", require("params.r0_um")) * 1e-6;
    const double d_a = detail::to_double("params.D_A_m2_s", require("params.D_A_m2_s"));
    const double k_f = detail::to_double("params.k_f_m3_s", require("params.k_f_m3_s"));
    const double k_b = detail::to_double("params.k_b_per_s", take("params.k_b_per_s").value_or("0"));
    const double k_d = detail::to_double("params.k_d_per_s", take("params.k_d_per_s").value_or("0"));
    const double n_a = detail::to_double("params.N_A", take("params.N_A").value_or("0"));

    ExperimentSpec spec{ChannelParams::make(a, r0, d_a, k_f, k_b, k_d, n_a)};

    if (auto dt = take("sim.dt_s")) {
        sim::SimConfig c;
        c.dt = detail::to_double("sim.dt_s", *dt);
        c.horizon = detail::to_double("sim.horizon_s", require("sim.horizon_s"));
        c.trials = static_cast<int>(detail::to_double("sim.trials", take("sim.trials").value_or("1")));
        c.master_seed = static_cast<std::uint64_t>(
            detail::to_double("sim.seed", take("sim.seed").value_or("0")));
        c.record_every = static_cast<int>(detail::to_double(
            "sim.record_every", take("sim.record_every").value_or("1")));
        spec.sim_cfg = c;
    }

    if (auto sv = take("sweep.k_b_per_s")) {
        spec.sweep_key = "k_b_per_s";
        spec.sweep_values = detail::to_list("sweep.k_b_per_s", *sv);
    }
    if (auto sv = take("sweep.k_d_per_s")) {
        if (!spec.sweep_key.empty())
            throw ConfigError("config: only one sweep key is supported");
        spec.sweep_key = "k_d_per_s";
        spec.sweep_values = detail::to_list("sweep.k_d_per_s", *sv);
    }

    spec.modes = detail::split_names(take("modes").value_or("analytic"));
    if (spec.modes.empty()) throw ConfigError("config: at least one mode required");
    for (const auto& m : spec.modes)
        if (m != "analytic" && m != "simulate" && m != "oracle" && m != "compare")
            throw ConfigError("config: unknown mode " + m);

    if (auto o = take("out")) spec.out_dir = *o;

    const int grid_points = static_cast<int>(
        detail::to_double("grid.points", take("grid.points").value_or("200")));
    double t_lo = 0.0, t_hi = 0.0;
    if (auto v = take("grid.t_min_s")) t_lo = detail::to_double("grid.t_min_s", *v);
    if (auto v = take("grid.t_max_s")) t_hi = detail::to_double("grid.t_max_s", *v);
    if (t_lo == 0.0 && spec.sim_cfg)
        t_lo = spec.sim_cfg->dt * spec.sim_cfg->record_every;
    if (t_hi == 0.0 && spec.sim_cfg) t_hi = spec.sim_cfg->horizon;
    if (t_lo == 0.0) t_lo = 1e-7;
    if (t_hi == 0.0) t_hi = 1e-3;
    spec.grid = log_grid(t_lo, t_hi, grid_points);

    if (!kv.empty())
        throw ConfigError("config: unknown key " + kv.begin()->first);
    return spec;
}

inline ExperimentSpec parse_spec_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open spec file " + path.string());
    return parse_spec(is);
}

// ---------------------------------------------------------------------------
// Experiment runner
// ---------------------------------------------------------------------------

struct RunRecord {
    int id = 0;
    std::string mode;
    std::string file;        // empty on failure
    std::string error;       // empty on success
    std::string params_text; // inline key-value dump of the sweep point
    std::uint64_t seed = 0;
};

struct Manifest {
    std::vector<RunRecord> runs;
    std::filesystem::path path;
    bool all_ok() const {
        return std::all_of(runs.begin(), runs.end(),
                           [](const RunRecord& r) { return r.error.empty(); });
    }
};

namespace detail {

inline std::string params_inline(const ChannelParams& p) {
    std::ostringstream os;
    os << "a_m=" << format_g17(p.a()) << " r0_m=" << format_g17(p.r0())
       << " D_A=" << format_g17(p.d_a()) << " k_f=" << format_g17(p.k_f())
       << " k_b=" << format_g17(p.k_b()) << " k_d=" << format_g17(p.k_d())
       << " N_A=" << format_g17(p.n_a());
    return os.str();
}

} // namespace detail

namespace detail {

// All modes for one sweep point.  Run ids are pre-assigned from the point
// index so concurrent sweep points produce an identical manifest.
inline std::vector<RunRecord> run_point(const ExperimentSpec& spec,
                                        std::size_t pi, const ChannelParams& p) {
    namespace fs = std::filesystem;
    std::vector<RunRecord> records;
    SignalSeries sim_series;
    bool have_sim = false;
    for (std::size_t mi = 0; mi < spec.modes.size(); ++mi) {
        const std::string& mode = spec.modes[mi];
        RunRecord rec;
        rec.id = static_cast<int>(pi * spec.modes.size() + mi);
        rec.mode = mode;
        rec.params_text = params_inline(p);
        rec.seed = spec.sim_cfg ? spec.sim_cfg->master_seed : 0;
        std::ostringstream name;
        name << "run" << std::setw(3) << std::setfill('0') << rec.id << "_"
             << mode << "_p" << pi << ".csv";
        const fs::path file = spec.out_dir / name.str();
        try {
            if (mode == "analytic") {
                const auto& grid = have_sim ? sim_series.times : spec.grid;
                write_csv(file, expected_series(grid, p));
            } else if (mode == "oracle") {
                write_csv(file, oracle_series(spec.grid, p, true));
            } else if (mode == "simulate") {
                if (!spec.sim_cfg)
                    throw ConfigError("simulate mode requires a sim.* section");
                sim_series = sim::run_ensemble(p, *spec.sim_cfg, 1);
                have_sim = true;
                write_csv(file, sim_series);
            } else {  // compare
                if (!have_sim)
                    throw ConfigError("compare mode requires simulate to run first");
                const SignalSeries ana = expected_series(sim_series.times, p);
                const DeviationReport rep = compare_series(ana, sim_series);
                std::ofstream os(file, std::ios::binary);
                os << "t_s,deviation,se_units\n";
                for (std::size_t i = 0; i < sim_series.times.size(); ++i)
                    os << format_g17(sim_series.times[i]) << ','
                       << format_g17(rep.deviation[i]) << ','
                       << format_g17(rep.se_units[i]) << '\n';
            }
            rec.file = name.str();
        } catch (const std::exception& e) {
            rec.error = e.what();
        }
        records.push_back(rec);
    }
    return records;
}

} // namespace detail

/// Runs every (sweep point, mode) combination, writing one CSV per series
/// plus manifest.txt.  Failures are recorded and the run continues.  jobs > 1
/// executes sweep points concurrently; output files and manifest ordering are
/// identical either way.
inline Manifest run_experiment(const ExperimentSpec& spec) {
    namespace fs = std::filesystem;
    fs::create_directories(spec.out_dir);
    Manifest manifest;
    manifest.path = spec.out_dir / "manifest.txt";

    std::vector<ChannelParams> points;
    if (spec.sweep_values.empty()) {
        points.push_back(spec.params);
    } else {
        for (double v : spec.sweep_values)
            points.push_back(spec.sweep_key == "k_b_per_s"
                                 ? spec.params.with_k_b(v)
                                 : spec.params.with_k_d(v));
    }

    std::vector<std::vector<RunRecord>> per_point(points.size());
    if (spec.jobs <= 1 || points.size() <= 1) {
        for (std::size_t pi = 0; pi < points.size(); ++pi)
            per_point[pi] = detail::run_point(spec, pi, points[pi]);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        const unsigned n_workers =
            std::min<std::size_t>(spec.jobs, points.size());
        for (unsigned w = 0; w < n_workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t pi = next.fetch_add(1); pi < points.size();
                     pi = next.fetch_add(1))
                    per_point[pi] = detail::run_point(spec, pi, points[pi]);
            });
        for (auto& th : pool) th.join();
    }
    for (auto& recs : per_point)
        manifest.runs.insert(manifest.runs.end(), recs.begin(), recs.end());

    std::ofstream os(manifest.path, std::ios::binary);
    if (!os) throw IoError("cannot write manifest");
    os << "# reactive-rx manifest version=" << kVersion << "\n";
    for (const auto& r : manifest.runs) {
        os << "run " << r.id << ": mode=" << r.mode;
        if (r.error.empty())
            os << " file=" << r.file;
        else
            os << " error=\"" << r.error << "\"";
        os << " seed=" << r.seed << " params=" << r.params_text << "\n";
    }
    return manifest;
}

} // namespace rrx::harness
