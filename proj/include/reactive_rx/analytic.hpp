#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "reactive_rx/errors.hpp"
#include "reactive_rx/params.hpp"
#include "reactive_rx/specfun.hpp"

namespace rrx::analytic {

using Complex = std::complex<double>;

/// Time series of channel observables.  stderr_ is empty for closed-form
/// series and carries the Monte Carlo standard error of the mean otherwise.
struct SignalSeries {
    std::vector<double> times;
    std::vector<double> values;
    std::vector<double> stderr_;

    void validate(double upper_bound) const {
        if (values.size() != times.size())
            throw DomainError("SignalSeries: size mismatch");
        if (!stderr_.empty() && stderr_.size() != times.size())
            throw DomainError("SignalSeries: stderr size mismatch");
        double prev = 0.0;
        for (std::size_t i = 0; i < times.size(); ++i) {
            if (!(times[i] > prev))
                throw DomainError("SignalSeries: times must be positive and strictly increasing");
            prev = times[i];
            if (!std::isfinite(values[i]))
                throw NonFiniteError("SignalSeries: non-finite value");
            if (values[i] < -1e-9 || values[i] > upper_bound * (1.0 + 1e-9))
                throw RangeError("SignalSeries: value out of range");
        }
    }
};

/// Monic cubic whose negated roots are (alpha, beta, gamma):
///   x^3 + c2 x^2 + c1 x + c0, x = sqrt(s + k_d).
struct CubicCoeffs {
    double c2, c1, c0;
};

inline CubicCoeffs cubic_coeffs(const ChannelParams& p) {
    const double c2 = (1.0 + p.k_f() / p.derived_kD()) * std::sqrt(p.d_a()) / p.a();
    const double c1 = p.k_b() - p.k_d();
    const double c0 = p.k_b() * std::sqrt(p.d_a()) / p.a() - p.k_d() * c2;
    return {c2, c1, c0};
}

/// The complex triple (alpha, beta, gamma) from the Laplace-domain
/// denominator cubic, together with the partial-fraction residues
/// eta1..eta3.  Units of every field are s^(-1/2).
struct RootTriple {
    Complex alpha, beta, gamma;
    Complex eta1, eta2, eta3;
};

namespace detail {

inline std::array<Complex, 3> cardano(double c2, double c1, double c0) {
    // Depressed cubic y^3 + p y + q via x = y - c2/3, trigonometric /
    // Cardano form in complex arithmetic.
    const double p = c1 - c2 * c2 / 3.0;
    const double q = 2.0 * c2 * c2 * c2 / 27.0 - c2 * c1 / 3.0 + c0;
    const Complex disc = std::sqrt(Complex(q * q / 4.0 + p * p * p / 27.0));
    Complex u3 = -q / 2.0 + disc;
    if (std::abs(u3) < std::abs(-q / 2.0 - disc)) u3 = -q / 2.0 - disc;
    Complex u = std::pow(u3, 1.0 / 3.0);
    std::array<Complex, 3> ys;
    if (std::abs(u) == 0.0) {
        ys = {Complex(0.0), Complex(0.0), Complex(0.0)};
    } else {
        const Complex omega(-0.5, 0.5 * std::sqrt(3.0));
        const Complex v = -p / (3.0 * u);
        ys = {u + v, u * omega + v * std::conj(omega),
              u * std::conj(omega) + v * omega};
    }
    for (auto& y : ys) y -= c2 / 3.0;
    return ys;
}

inline Complex cubic_eval(double c2, double c1, double c0, Complex x) {
    return ((x + c2) * x + c1) * x + c0;
}

inline Complex cubic_deriv(double c2, double c1, Complex x) {
    return (3.0 * x + 2.0 * c2) * x + c1;
}

} // namespace detail

/// Solves the denominator cubic and computes the residues.  The roots are
/// polished by Newton iteration and canonicalized by sorting on
/// (real part, imaginary part).  Throws DegenerateRootsError when two roots
/// coincide to within the documented threshold; callers must fall back to
/// numerical Laplace inversion in that case.
inline RootTriple solve_roots(const ChannelParams& p) {
    const auto [c2, c1, c0] = cubic_coeffs(p);
    auto xs = detail::cardano(c2, c1, c0);

    const double scale = std::max({std::abs(xs[0]), std::abs(xs[1]),
                                   std::abs(xs[2]), 1.0});
    for (auto& x : xs) {
        for (int it = 0; it < 4; ++it) {
            const Complex fx = detail::cubic_eval(c2, c1, c0, x);
            const Complex dfx = detail::cubic_deriv(c2, c1, x);
            if (std::abs(dfx) == 0.0) break;
            const Complex step = fx / dfx;
            x -= step;
            if (std::abs(step) <= 1e-16 * scale) break;
        }
        if (!std::isfinite(x.real()) || !std::isfinite(x.imag()))
            throw NonFiniteError("solve_roots: non-finite root");
    }

    std::array<Complex, 3> abg = {-xs[0], -xs[1], -xs[2]};
    // The cubic has real coefficients: snap conjugate pairs exactly.
    std::sort(abg.begin(), abg.end(), [](Complex l, Complex r) {
        if (l.real() != r.real()) return l.real() < r.real();
        return l.imag() < r.imag();
    });
    for (int i = 0; i + 1 < 3; ++i) {
        if (std::abs(abg[i].real() - abg[i + 1].real()) <
                1e-12 * std::max(1.0, std::abs(abg[i])) &&
            std::abs(abg[i].imag() + abg[i + 1].imag()) <
                1e-12 * std::max(1.0, std::abs(abg[i]))) {
            const double re = 0.5 * (abg[i].real() + abg[i + 1].real());
            const double im = 0.5 * (abg[i].imag() - abg[i + 1].imag());
            abg[i] = Complex(re, -std::abs(im));
            abg[i + 1] = Complex(re, std::abs(im));
        }
    }

    const double sep_scale =
        std::max({std::abs(abg[0]), std::abs(abg[1]), std::abs(abg[2]),
                  std::sqrt(p.d_a()) / p.a()});
    const double min_sep =
        std::min({std::abs(abg[0] - abg[1]), std::abs(abg[1] - abg[2]),
                  std::abs(abg[0] - abg[2])});
    if (min_sep < 1e-8 * sep_scale)
        throw DegenerateRootsError(
            "solve_roots: coincident cubic roots; use the Laplace-inversion fallback");

    const Complex al = abg[0], be = abg[1], ga = abg[2];
    RootTriple rt;
    rt.alpha = al;
    rt.beta = be;
    rt.gamma = ga;
    // Partial-fraction residues of the reaction-correction term,
    // eta_i = N(-root_i) / prod_{j != i} (root_j - root_i) with
    // N(x) = c2 x^2 + c0 = c2 x^2 + alpha*beta*gamma.
    rt.eta1 = al * (al + be) * (al + ga) / ((be - al) * (ga - al));
    rt.eta2 = be * (al + be) * (be + ga) / ((al - be) * (ga - be));
    rt.eta3 = ga * (ga + al) * (ga + be) / ((al - ga) * (be - ga));
    return rt;
}

namespace detail {

// Real part of a three-term W sum, asserting the imaginary component is a
// rounding residue (the roots occur in conjugate pairs, so the sum is real).
inline double real_w_sum(Complex s1, Complex s2, Complex s3) {
    const Complex sum = s1 + s2 + s3;
    const double mag = std::max(std::abs(sum), 1e-300);
    if (std::abs(sum.imag()) > 1e-9 * mag)
        throw ImaginaryLeakError("W-sum imaginary part exceeds tolerance");
    return sum.real();
}

} // namespace detail

/// Green's function P_A(r, t | r0): probability density (m^-3) of finding a
/// free A molecule at radius r at time t.
inline double green_function(double r, double t, const ChannelParams& p,
                             const RootTriple& rt) {
    if (!(r >= p.a())) throw DomainError("green_function: r < a");
    if (!(t > 0.0)) throw DomainError("green_function: t <= 0");
    const double pi = std::numbers::pi;
    const double r0 = p.r0(), da = p.d_a();
    const double four_dt = 4.0 * da * t;
    const double free_term = std::exp(-(r - r0) * (r - r0) / four_dt);
    const double image_term =
        std::exp(-(r + r0 - 2.0 * p.a()) * (r + r0 - 2.0 * p.a()) / four_dt);
    const double gauss =
        (free_term + image_term) / (8.0 * pi * r * r0 * std::sqrt(pi * da * t));

    const Complex n((r + r0 - 2.0 * p.a()) / std::sqrt(four_dt), 0.0);
    const double sq_t = std::sqrt(t);
    const double wsum = detail::real_w_sum(
        rt.eta1 * specfun::w_paper(n, rt.alpha * sq_t),
        rt.eta2 * specfun::w_paper(n, rt.beta * sq_t),
        rt.eta3 * specfun::w_paper(n, rt.gamma * sq_t));
    return std::exp(-p.k_d() * t) *
           (gauss - wsum / (4.0 * pi * r * r0 * std::sqrt(da)));
}

/// Channel impulse response P_AC(t | r0): probability that one released A
/// molecule is bound as a C complex at time t.
inline double impulse_response(double t, const ChannelParams& p,
                               const RootTriple& rt) {
    if (!(t > 0.0)) throw DomainError("impulse_response: t <= 0");
    const double pi = std::numbers::pi;
    const Complex n((p.r0() - p.a()) / std::sqrt(4.0 * p.d_a() * t), 0.0);
    const double sq_t = std::sqrt(t);
    const Complex al = rt.alpha, be = rt.beta, ga = rt.gamma;
    const double wsum = detail::real_w_sum(
        al * specfun::w_paper(n, al * sq_t) / ((ga - al) * (al - be)),
        be * specfun::w_paper(n, be * sq_t) / ((be - ga) * (al - be)),
        ga * specfun::w_paper(n, ga * sq_t) / ((be - ga) * (ga - al)));
    const double pref = p.k_f() * std::exp(-p.k_d() * t) /
                        (4.0 * pi * p.r0() * p.a() * std::sqrt(p.d_a()));
    double v = pref * wsum;
    if (v < -1e-9 || v > 1.0 + 1e-9)
        throw RangeError("impulse_response: value outside [0, 1]");
    return std::clamp(v, 0.0, 1.0);
}

/// Survival probability S(t | r0) = 1 - P_AC(t | r0).
inline double survival_probability(double t, const ChannelParams& p,
                                   const RootTriple& rt) {
    return 1.0 - impulse_response(t, p, rt);
}

/// Expected received signal N_C(t) = N_A * P_AC(t | r0) on a time grid.
/// Solves the cubic once and reuses the triple.
inline SignalSeries expected_received(const std::vector<double>& grid,
                                      const ChannelParams& p) {
    const RootTriple rt = solve_roots(p);
    SignalSeries out;
    out.times = grid;
    out.values.reserve(grid.size());
    for (double t : grid)
        out.values.push_back(p.n_a() * impulse_response(t, p, rt));
    out.validate(std::max(p.n_a(), 1.0));
    return out;
}

} // namespace rrx::analytic
