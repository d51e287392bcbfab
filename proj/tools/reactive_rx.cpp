// reactive-rx: experiment runner for the reactive-receiver diffusion channel.
//
//   reactive-rx run <spec-file> [--strict] [--jobs N] [--seed S] [--out DIR]
//   reactive-rx check
//   reactive-rx figure2 [--scale desk|paper] [--jobs N] [--seed S] [--out DIR]
//   reactive-rx figure3 [--scale desk|paper] [--jobs N] [--seed S] [--out DIR]
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure,
// 4 strict comparison failure.

#include <cmath>
#include <complex>
#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "reactive_rx/harness.hpp"
#include "reactive_rx/quadrature.hpp"

using namespace rrx;
using Complex = std::complex<double>;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitStrict = 4;

ChannelParams figure_params(double n_a) {
    return ChannelParams::make(0.5e-6, 1e-6, 5e-9, 3.14e-14, 0.0, 0.0, n_a);
}

struct CommonOpts {
    std::optional<unsigned> jobs;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    bool strict = false;
};

void apply_overrides(harness::ExperimentSpec& spec, const CommonOpts& o) {
    if (o.jobs) spec.jobs = *o.jobs;
    if (o.out) spec.out_dir = *o.out;
    if (o.seed) {
        if (!spec.sim_cfg)
            throw ConfigError("--seed given but the run has no simulation");
        spec.sim_cfg->master_seed = *o.seed;
    }
    spec.strict = o.strict;
}

int execute(const harness::ExperimentSpec& spec) {
    const auto manifest = harness::run_experiment(spec);
    int failures = 0;
    for (const auto& r : manifest.runs) {
        if (r.error.empty()) {
            std::printf("run %d (%s): ok -> %s\n", r.id, r.mode.c_str(),
                        r.file.c_str());
        } else {
            ++failures;
            std::printf("run %d (%s): FAILED: %s\n", r.id, r.mode.c_str(),
                        r.error.c_str());
        }
    }
    std::printf("manifest: %s\n", manifest.path.string().c_str());
    if (failures > 0) {
        std::fprintf(stderr, "%d of %zu runs failed\n", failures,
                     manifest.runs.size());
        return kExitNumerical;
    }

    if (!spec.strict) return kExitOk;

    // Strict mode: every simulate series must agree with its analytic
    // counterpart (>= 95% of points with reference > 10 inside
    // max(3.5 SE, 5%)), and every oracle series must match analytic to 1e-6.
    bool strict_ok = true;
    const std::size_t n_modes = spec.modes.size();
    const std::size_t n_points =
        spec.sweep_values.empty() ? 1 : spec.sweep_values.size();
    auto find_mode = [&](std::size_t pi, const std::string& mode)
        -> std::optional<analytic::SignalSeries> {
        for (std::size_t mi = 0; mi < n_modes; ++mi)
            if (spec.modes[mi] == mode)
                return harness::read_csv(spec.out_dir /
                                         manifest.runs[pi * n_modes + mi].file);
        return std::nullopt;
    };
    for (std::size_t pi = 0; pi < n_points; ++pi) {
        const auto ana = find_mode(pi, "analytic");
        if (!ana) continue;
        if (auto mc = find_mode(pi, "simulate")) {
            const double frac = harness::agreement_fraction(*ana, *mc, 10.0);
            std::printf("strict: point %zu simulate agreement %.4f\n", pi, frac);
            if (frac < 0.95) strict_ok = false;
        }
        if (auto orc = find_mode(pi, "oracle")) {
            const double rel = harness::compare_series(*ana, *orc).max_abs_rel;
            std::printf("strict: point %zu oracle max relative %.3e\n", pi, rel);
            if (rel > 1e-6) strict_ok = false;
        }
    }
    if (!strict_ok) {
        std::fprintf(stderr, "strict comparison failed\n");
        return kExitStrict;
    }
    return kExitOk;
}

harness::ExperimentSpec figure_spec(int figure, const std::string& scale) {
    harness::ExperimentSpec spec{figure_params(scale == "paper" ? 5000 : 1000)};
    if (figure == 2) {
        spec.sweep_key = "k_b_per_s";
        spec.sweep_values = {0.0, 2e3, 4e3, 1e4, 2e4, 4e4};
        spec.out_dir = "figure2";
    } else {
        spec.params = spec.params.with_k_b(2e5);
        spec.sweep_key = "k_d_per_s";
        spec.sweep_values = {0.0, 2e3, 1e4, 2e4, 4e4};
        spec.out_dir = "figure3";
    }
    sim::SimConfig cfg;
    cfg.horizon = 5e-4;
    if (scale == "paper") {
        cfg.dt = 5e-8;
        cfg.trials = 50000;
        cfg.record_every = 50;
    } else {
        cfg.dt = 1e-7;
        cfg.trials = 200;
        cfg.record_every = 25;
    }
    cfg.master_seed = 1;
    spec.sim_cfg = cfg;
    spec.modes = {"simulate", "analytic", "compare"};
    spec.grid = harness::log_grid(cfg.dt * cfg.record_every, cfg.horizon, 200);
    return spec;
}

// Built-in invariant and cross-check suite for `reactive-rx check`.
int run_check() {
    int failed = 0;
    auto report = [&](const char* name, bool ok) {
        std::printf("%-44s %s\n", name, ok ? "pass" : "FAIL");
        if (!ok) ++failed;
    };
    auto rel = [](double got, double want) {
        return std::abs(got - want) / std::max(std::abs(want), 1e-300);
    };

    report("erfcx(0) = 1", rel(specfun::erfcx_real(0.0), 1.0) <= 1e-13);
    report("erfcx(1) spot value",
           rel(specfun::erfcx_real(1.0), 0.42758357615580700441) <= 1e-13);
    report("faddeeva(2i) = erfcx(2)",
           rel(specfun::faddeeva(Complex(0.0, 2.0)).real(),
               specfun::erfcx_real(2.0)) <= 1e-10);
    report("W(3, 0) = erfc(3)",
           rel(specfun::w_paper(Complex(3.0), Complex(0.0)).real(),
               2.2090496998585441373e-5) <= 1e-12);

    auto f84 = [](Complex s) { return std::exp(-std::sqrt(s)) / std::sqrt(s); };
    report("Talbot pair exp(-sqrt(s))/sqrt(s)",
           rel(oracle::invert_laplace(f84, 0.25), 0.41510749742059470334) <=
               1e-7);
    auto f90 = [](Complex s) {
        const Complex rs = std::sqrt(s);
        return std::exp(-rs) / (rs * (2.0 + rs));
    };
    report("Talbot pair exp(-sqrt(s))/(sqrt(s)(2+sqrt(s)))",
           rel(oracle::invert_laplace(f90, 0.5), 0.14740387052077197714) <=
               1e-7);

    const auto p = figure_params(5000).with_k_b(2e3);
    bool bc_ok = true, pf_ok = true;
    const auto rt = analytic::solve_roots(p);
    for (double im : {-3e5, 0.0, 3e5}) {
        const Complex s(5e4, im);
        bc_ok = bc_ok && oracle::check_boundary_condition(s, p) <= 1e-6;
        pf_ok = pf_ok && oracle::check_partial_fractions(s, p, rt) <= 1e-8;
    }
    report("Laplace boundary-condition residual", bc_ok);
    report("partial-fraction residual", pf_ok);

    bool match = true;
    for (double t : {1e-6, 1e-5, 1e-4})
        match = match && rel(analytic::impulse_response(t, p, rt),
                             oracle::impulse_response_via_oracle(t, p)) <= 1e-6;
    report("closed form vs Laplace inversion", match);

    bool conserve = true;
    const double pi_v = std::acos(-1.0);
    for (double t : {1e-6, 1e-5}) {
        const double rmax = p.r0() + 12.0 * std::sqrt(2.0 * p.d_a() * t);
        auto f = [&](double r) {
            return 4.0 * pi_v * r * r * analytic::green_function(r, t, p, rt);
        };
        const double total = quad::integrate(f, p.a(), rmax, 1e-7) +
                             analytic::impulse_response(t, p, rt);
        conserve = conserve && std::abs(total - 1.0) <= 1e-4;
    }
    report("probability conservation", conserve);

    sim::SimConfig cfg;
    cfg.dt = 1e-7;
    cfg.horizon = 2e-5;
    cfg.trials = 16;
    cfg.master_seed = 42;
    cfg.record_every = 10;
    const auto pp = figure_params(200).with_k_b(4e3);
    const auto s1 = sim::run_ensemble(pp, cfg, 1);
    const auto s4 = sim::run_ensemble(pp, cfg, 4);
    report("ensemble thread-count determinism",
           s1.values == s4.values && s1.stderr_ == s4.stderr_);

    std::printf("%s\n", failed == 0 ? "all checks passed"
                                    : "one or more checks FAILED");
    return failed == 0 ? kExitOk : kExitNumerical;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"reactive receiver diffusion-channel model"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string spec_file;
    std::string scale = "desk";

    auto add_common = [&](CLI::App* sub, bool with_strict) {
        sub->add_option("--jobs", opts.jobs, "concurrent sweep points");
        sub->add_option("--seed", opts.seed, "master seed override");
        sub->add_option("--out", opts.out, "output directory");
        if (with_strict)
            sub->add_flag("--strict", opts.strict,
                          "fail (exit 4) when comparisons miss tolerance");
    };

    auto* run = app.add_subcommand("run", "execute an experiment spec file");
    run->add_option("spec-file", spec_file, "experiment spec")->required();
    add_common(run, true);

    auto* check = app.add_subcommand("check", "built-in invariant/oracle suite");

    auto* fig2 = app.add_subcommand("figure2", "reversible-rate sweep preset");
    auto* fig3 = app.add_subcommand("figure3", "degradation-rate sweep preset");
    for (auto* sub : {fig2, fig3}) {
        sub->add_option("--scale", scale, "desk or paper")
            ->check(CLI::IsMember({"desk", "paper"}));
        add_common(sub, true);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (check->parsed()) return run_check();
        harness::ExperimentSpec spec =
            run->parsed() ? harness::parse_spec_file(spec_file)
                          : figure_spec(fig2->parsed() ? 2 : 3, scale);
        apply_overrides(spec, opts);
        return execute(spec);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kExitNumerical;
    }
}
