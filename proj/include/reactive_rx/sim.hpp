#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include "reactive_rx/analytic.hpp"
#include "reactive_rx/errors.hpp"
#include "reactive_rx/params.hpp"
#include "reactive_rx/quadrature.hpp"

namespace rrx::sim {

// ---------------------------------------------------------------------------
// RNG: counter-based per-trial streams.  Trial i uses an xoshiro256++ engine
// whose state is derived from (master_seed, i) through splitmix64, so the
// draw sequence of a trial is independent of thread scheduling.  Within a
// trial the draw order is: per free particle 3 Gaussians, then uniforms as
// needed (degradation, forward acceptance); per bound particle one uniform,
// then radius + 2 direction uniforms on reversal.
// ---------------------------------------------------------------------------

class Rng {
public:
    Rng(std::uint64_t master_seed, std::uint64_t stream) {
        std::uint64_t x = master_seed + 0x9E3779B97F4A7C15ull * (stream + 1);
        for (auto& w : state_) w = splitmix64(x);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result =
            rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform in [0, 1).
    double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal via the polar method with one cached value.
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        cached_ = v * f;
        has_cached_ = true;
        return u * f;
    }

private:
    static std::uint64_t splitmix64(std::uint64_t& x) {
        std::uint64_t z = (x += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_{};
    double cached_ = 0.0;
    bool has_cached_ = false;
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct SimConfig {
    double dt = 0.0;
    double horizon = 0.0;
    int trials = 0;
    std::uint64_t master_seed = 0;
    int record_every = 1;

    /// Throws on hard violations; returns a non-empty message when a rate is
    /// in the warn band (k*dt in (0.1, 1]).
    std::string validate(const ChannelParams& p) const {
        if (!(dt > 0.0)) throw DomainError("SimConfig: dt must be > 0");
        if (!(horizon >= dt)) throw DomainError("SimConfig: horizon < dt");
        if (trials < 1) throw DomainError("SimConfig: trials must be >= 1");
        if (record_every < 1) throw DomainError("SimConfig: record_every must be >= 1");
        if (p.k_d() * dt > 1.0 || p.k_b() * dt > 1.0)
            throw DomainError("SimConfig: rate * dt exceeds 1; step size far too large");
        std::string warn;
        if (p.k_d() * dt > 0.1) warn += "k_d*dt exceeds 0.1; ";
        if (p.k_b() * dt > 0.1) warn += "k_b*dt exceeds 0.1; ";
        return warn;
    }

    int n_steps() const { return static_cast<int>(std::llround(horizon / dt)); }
};

// ---------------------------------------------------------------------------
// Overlap kernel (two-point diffusion Green's function over dt)
// ---------------------------------------------------------------------------

/// Probability that a free molecule at radius r ends a step of length dt
/// inside the receiver sphere.  sigma^2 = 4*D_A*dt.
inline double overlap_probability(double r, double dt, const ChannelParams& p) {
    if (!(r >= p.a())) throw DomainError("overlap_probability: r < a");
    if (!(dt > 0.0)) throw DomainError("overlap_probability: dt <= 0");
    const double a = p.a();
    const double sigma = std::sqrt(4.0 * p.d_a() * dt);
    const double up = (r + a) / sigma, um = (r - a) / sigma;
    // Gaussian prefactor sigma/(2 r sqrt(pi)): the exact end-point-in-sphere
    // probability of an isotropic Gaussian displacement with per-axis
    // standard deviation sigma/sqrt(2).  (A prefactor of a/(2 r sqrt(pi))
    // turns the expression negative a few sigma above the surface and cannot
    // reproduce direct displacement sampling.)
    const double gauss = sigma / (2.0 * r * std::sqrt(std::numbers::pi)) *
                         (std::exp(-up * up) - std::exp(-um * um));
    // erf((r+a)/sigma) + erf((a-r)/sigma), written with erfc for a stable tail
    const double erf_pair = 0.5 * (std::erfc(um) - std::erfc(up));
    double v = gauss + erf_pair;
    if (v < 0.0) {
        if (v < -1e-15) throw DomainError("overlap_probability: negative value");
        v = 0.0;
    }
    return v;
}

/// Normalization factor rho = int_a^inf Pr(Ovr | r, dt) r^2 dr, truncated at
/// a + 10 sigma (the kernel is Gaussian-small beyond).
inline double compute_rho(double dt, const ChannelParams& p) {
    if (!(dt > 0.0)) throw DomainError("compute_rho: dt <= 0");
    const double sigma = std::sqrt(4.0 * p.d_a() * dt);
    const double hi = p.a() + 10.0 * sigma;
    return quad::integrate(
        [&](double r) { return overlap_probability(r, dt, p) * r * r; }, p.a(),
        hi, 1e-9);
}

/// Tabulated inverse CDF of the normalized radial re-placement density
/// Pr(Ovr | r, dt) * r^2 / rho, built once per (params, dt).
class OverlapSampler {
public:
    OverlapSampler(const ChannelParams& p, double dt) {
        const double sigma = std::sqrt(4.0 * p.d_a() * dt);
        const double lo = p.a(), hi = p.a() + 10.0 * sigma;
        const int n = 4096;
        radii_.resize(n);
        cdf_.resize(n);
        const double lr = std::log(lo), dh = (std::log(hi) - lr) / (n - 1);
        for (int i = 0; i < n; ++i) radii_[i] = std::exp(lr + i * dh);
        radii_.front() = lo;
        radii_.back() = hi;

        auto f = [&](double r) { return overlap_probability(r, dt, p) * r * r; };
        cdf_[0] = 0.0;
        for (int i = 1; i < n; ++i) {
            const double l = radii_[i - 1], r = radii_[i];
            const double m = 0.5 * (l + r);
            cdf_[i] = cdf_[i - 1] + (r - l) / 6.0 * (f(l) + 4.0 * f(m) + f(r));
        }
        rho_ = compute_rho(dt, p);
        const double total = cdf_.back();
        if (!(total > 0.0)) throw QuadratureError("OverlapSampler: zero mass");
        if (std::abs(total - rho_) > 1e-6 * rho_)
            throw QuadratureError("OverlapSampler: tabulation disagrees with rho");
        for (auto& c : cdf_) c /= total;
        cdf_.back() = 1.0;
        build_pchip();
    }

    double rho() const { return rho_; }
    const std::vector<double>& radii() const { return radii_; }
    const std::vector<double>& cdf() const { return cdf_; }

    /// Inverse-CDF draw; u in [0, 1).
    double sample_radius(double u) const {
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        std::size_t i = it == cdf_.begin() ? 0 : (it - cdf_.begin() - 1);
        if (i >= cdf_.size() - 1) i = cdf_.size() - 2;
        const double h = cdf_[i + 1] - cdf_[i];
        if (h <= 0.0) return radii_[i];
        const double s = (u - cdf_[i]) / h;
        // Hermite basis on [cdf_i, cdf_{i+1}] with Fritsch-Carlson slopes.
        const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
        const double h10 = s * (1 - s) * (1 - s);
        const double h01 = s * s * (3 - 2 * s);
        const double h11 = s * s * (s - 1);
        return h00 * radii_[i] + h10 * h * slope_[i] + h01 * radii_[i + 1] +
               h11 * h * slope_[i + 1];
    }

private:
    void build_pchip() {
        // Monotone cubic interpolant of r as a function of the CDF value.
        const std::size_t n = cdf_.size();
        slope_.assign(n, 0.0);
        std::vector<double> d(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double h = cdf_[i + 1] - cdf_[i];
            d[i] = h > 0.0 ? (radii_[i + 1] - radii_[i]) / h : 0.0;
        }
        slope_[0] = d[0];
        slope_[n - 1] = d[n - 2];
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (d[i - 1] * d[i] <= 0.0) {
                slope_[i] = 0.0;
            } else {
                const double h0 = cdf_[i] - cdf_[i - 1];
                const double h1 = cdf_[i + 1] - cdf_[i];
                const double w0 = 2.0 * h1 + h0, w1 = h1 + 2.0 * h0;
                slope_[i] = (w0 + w1) / (w0 / d[i - 1] + w1 / d[i]);
            }
        }
    }

    std::vector<double> radii_, cdf_, slope_;
    double rho_ = 0.0;
};

// ---------------------------------------------------------------------------
// Per-trial particle state, structure-of-arrays
// ---------------------------------------------------------------------------

struct TrialState {
    std::vector<double> x, y, z;      // free A molecules
    std::vector<std::uint8_t> dead;   // pending removal (degraded or bound)
    std::vector<std::array<double, 3>> bound;  // C complexes on the sphere
    long long n_free = 0;
    long long n_degraded = 0;
    long long n_total = 0;
    int steps_since_compaction = 0;

    static TrialState release(const ChannelParams& p) {
        TrialState st;
        const auto n = static_cast<std::size_t>(p.n_a());
        st.x.assign(n, 0.0);
        st.y.assign(n, 0.0);
        st.z.assign(n, p.r0());  // point release on the z-axis
        st.dead.assign(n, 0);
        st.n_free = static_cast<long long>(n);
        st.n_total = st.n_free;
        return st;
    }

    void compact() {
        std::size_t w = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (!dead[i]) {
                x[w] = x[i];
                y[w] = y[i];
                z[w] = z[i];
                ++w;
            }
        }
        x.resize(w);
        y.resize(w);
        z.resize(w);
        dead.assign(w, 0);
        steps_since_compaction = 0;
    }
};

namespace detail {

// First intersection of the segment p0 -> p1 with the sphere |p| = a,
// snapped exactly onto the surface.  p0 is outside, p1 inside.
inline std::array<double, 3> entry_point(const std::array<double, 3>& p0,
                                         const std::array<double, 3>& p1,
                                         double a) {
    const double dx = p1[0] - p0[0], dy = p1[1] - p0[1], dz = p1[2] - p0[2];
    const double dd = dx * dx + dy * dy + dz * dz;
    const double b = p0[0] * dx + p0[1] * dy + p0[2] * dz;
    const double c = p0[0] * p0[0] + p0[1] * p0[1] + p0[2] * p0[2] - a * a;
    const double disc = b * b - dd * c;
    std::array<double, 3> q;
    if (disc <= 0.0 || dd == 0.0) {
        q = p1;  // tangent within round-off: project the endpoint radially
    } else {
        double t = (-b - std::sqrt(disc)) / dd;
        t = std::clamp(t, 0.0, 1.0);
        q = {p0[0] + t * dx, p0[1] + t * dy, p0[2] + t * dz};
    }
    const double qn = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2]);
    const double f = a / qn;
    return {q[0] * f, q[1] * f, q[2] * f};
}

} // namespace detail

/// Pre-derived per-step reaction probabilities.
struct StepKernel {
    double step_std;    // per-axis Gaussian standard deviation sqrt(2 D dt)
    double p_degrade;   // 1 - exp(-k_d dt)
    double p_revert;    // 1 - exp(-k_b dt)
    double p_forward;   // k_f dt / (4 pi rho)

    StepKernel(const ChannelParams& p, const SimConfig& cfg,
               const OverlapSampler& sampler)
        : step_std(std::sqrt(2.0 * p.d_a() * cfg.dt)),
          p_degrade(-std::expm1(-p.k_d() * cfg.dt)),
          p_revert(-std::expm1(-p.k_b() * cfg.dt)),
          p_forward(p.k_f() * cfg.dt /
                    (4.0 * std::numbers::pi * sampler.rho())) {
        if (p_forward > 1.0)
            throw DomainError("forward acceptance probability exceeds 1; reduce dt");
    }
};

/// One simulation step: diffuse, degrade, resolve forward reactions, then
/// resolve backward reactions with radial re-placement.  Molecules released
/// by a backward reaction this step join the free population for the next
/// step and are not re-tested for overlap.
inline void step_trial(TrialState& st, const ChannelParams& p,
                       const StepKernel& k, const OverlapSampler& sampler,
                       Rng& rng) {
    const double a = p.a();
    const double a2 = a * a;
    const std::size_t n = st.x.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (st.dead[i]) continue;
        const double gx = rng.normal() * k.step_std;
        const double gy = rng.normal() * k.step_std;
        const double gz = rng.normal() * k.step_std;
        const double nx = st.x[i] + gx, ny = st.y[i] + gy, nz = st.z[i] + gz;
        if (k.p_degrade > 0.0 && rng.uniform() <= k.p_degrade) {
            st.dead[i] = 1;
            --st.n_free;
            ++st.n_degraded;
            continue;
        }
        const double r2 = nx * nx + ny * ny + nz * nz;
        if (r2 < a2) {
            if (k.p_forward > 0.0 && rng.uniform() <= k.p_forward) {
                st.bound.push_back(detail::entry_point(
                    {st.x[i], st.y[i], st.z[i]}, {nx, ny, nz}, a));
                st.dead[i] = 1;
                --st.n_free;
            }
            // rejected: molecule stays at its pre-step position
        } else {
            st.x[i] = nx;
            st.y[i] = ny;
            st.z[i] = nz;
        }
    }

    if (k.p_revert > 0.0 && !st.bound.empty()) {
        std::vector<std::array<double, 3>> released;
        std::size_t w = 0;
        for (std::size_t i = 0; i < st.bound.size(); ++i) {
            if (rng.uniform() <= k.p_revert) {
                const double r = sampler.sample_radius(rng.uniform());
                const double ct = 2.0 * rng.uniform() - 1.0;
                const double st_ = std::sqrt(std::max(0.0, 1.0 - ct * ct));
                const double phi = 2.0 * std::numbers::pi * rng.uniform();
                released.push_back(
                    {r * st_ * std::cos(phi), r * st_ * std::sin(phi), r * ct});
            } else {
                st.bound[w++] = st.bound[i];
            }
        }
        st.bound.resize(w);
        for (const auto& q : released) {
            st.x.push_back(q[0]);
            st.y.push_back(q[1]);
            st.z.push_back(q[2]);
            st.dead.push_back(0);
            ++st.n_free;
        }
    }

    if (++st.steps_since_compaction >= 64) st.compact();

    if (st.n_free + static_cast<long long>(st.bound.size()) + st.n_degraded !=
        st.n_total)
        throw InvariantBreachError("step_trial: particle conservation violated");
}

/// Runs `trials` independent releases and returns the per-time mean and
/// standard error of the bound-receptor count.  Deterministic for a given
/// master_seed regardless of thread count: trial i always uses stream i and
/// the reduction runs in trial-index order.
inline analytic::SignalSeries run_ensemble(const ChannelParams& p,
                                           const SimConfig& cfg,
                                           unsigned threads = 0) {
    cfg.validate(p);
    const OverlapSampler sampler(p, cfg.dt);
    const StepKernel kernel(p, cfg, sampler);
    const int n_steps = cfg.n_steps();
    const int n_rec = n_steps / cfg.record_every;
    if (n_rec < 1) throw DomainError("run_ensemble: horizon shorter than one record interval");

    std::vector<std::vector<double>> per_trial(
        cfg.trials, std::vector<double>(n_rec, 0.0));

    auto run_trial = [&](int trial) {
        Rng rng(cfg.master_seed, static_cast<std::uint64_t>(trial));
        TrialState st = TrialState::release(p);
        int rec = 0;
        for (int step = 1; step <= n_steps; ++step) {
            step_trial(st, p, kernel, sampler, rng);
            if (step % cfg.record_every == 0 && rec < n_rec)
                per_trial[trial][rec++] = static_cast<double>(st.bound.size());
        }
    };

    if (threads == 0) threads = std::thread::hardware_concurrency();
    if (threads <= 1 || cfg.trials == 1) {
        for (int t = 0; t < cfg.trials; ++t) run_trial(t);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (unsigned w = 0; w < threads; ++w)
            pool.emplace_back([&] {
                for (int t = next.fetch_add(1); t < cfg.trials;
                     t = next.fetch_add(1))
                    run_trial(t);
            });
        for (auto& th : pool) th.join();
    }

    analytic::SignalSeries out;
    out.times.resize(n_rec);
    out.values.assign(n_rec, 0.0);
    out.stderr_.assign(n_rec, 0.0);
    for (int k = 0; k < n_rec; ++k)
        out.times[k] = (k + 1) * cfg.record_every * cfg.dt;
    for (int t = 0; t < cfg.trials; ++t)
        for (int k = 0; k < n_rec; ++k) out.values[k] += per_trial[t][k];
    for (auto& v : out.values) v /= cfg.trials;
    if (cfg.trials > 1) {
        for (int t = 0; t < cfg.trials; ++t)
            for (int k = 0; k < n_rec; ++k) {
                const double d = per_trial[t][k] - out.values[k];
                out.stderr_[k] += d * d;
            }
        for (auto& se : out.stderr_)
            se = std::sqrt(se / (cfg.trials - 1.0) / cfg.trials);
    }
    out.validate(std::max(p.n_a(), 1.0));
    return out;
}

} // namespace rrx::sim
