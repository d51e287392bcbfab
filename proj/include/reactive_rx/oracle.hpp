#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>

#include <quadmath.h>

#include "reactive_rx/analytic.hpp"
#include "reactive_rx/errors.hpp"
#include "reactive_rx/params.hpp"

namespace rrx::oracle {

using Complex = std::complex<double>;

namespace detail {

// sqrt(s + k_d) on the principal branch (non-negative real part).
inline Complex branch_sqrt(Complex s, double k_d) {
    Complex w = std::sqrt(s + k_d);
    if (w.real() < 0.0) w = -w;
    return w;
}

// Laplace-domain Green's function, without the r >= a
// domain check (the boundary-condition probe differentiates across r = a).
// The free term decays with |r - r0|; the printed r - r0 form is the
// r >= r0 branch of the same expression.
inline Complex laplace_green_raw(double r, Complex s, const ChannelParams& p) {
    const double pi = std::numbers::pi;
    const double r0 = p.r0(), da = p.d_a(), a = p.a();
    const double kD = p.derived_kD();
    const Complex w = branch_sqrt(s, p.k_d());   // sqrt(s + k_d)
    const Complex x = w / std::sqrt(da);         // sqrt((s + k_d)/D_A)
    const Complex denom_sq = 8.0 * pi * r * r0 * std::sqrt(da) * w;
    const Complex free_term = std::exp(-x * std::abs(r - r0)) / denom_sq;
    const Complex image_kernel = std::exp(-x * (r + r0 - 2.0 * a));
    const Complex image_term = image_kernel / denom_sq;
    const Complex reaction = kD + s * p.k_f() / (s + p.k_b());
    const Complex correction =
        reaction / (a * kD * x + reaction) * image_kernel / (0.5 * denom_sq);
    return free_term + image_term - correction;
}

} // namespace detail

/// Laplace transform P_A(r, s | r0) of the Green's function: free term,
/// image term, and the reaction correction term.
inline Complex laplace_green(double r, Complex s, const ChannelParams& p) {
    if (!(r >= p.a())) throw DomainError("laplace_green: r < a");
    if (s.imag() == 0.0 && !(s.real() > -p.k_d()))
        throw BranchError("laplace_green: s on the branch cut");
    return detail::laplace_green_raw(r, s, p);
}

/// Laplace transform of the integrated reactive flux, i.e. of the channel
/// impulse response P_AC(t | r0).  The surface boundary condition turns
/// (1/s) * 4*pi*a^2*D_A * dP/dr|_a into k_f/(s + k_b) * P_A(a, s).
inline Complex laplace_impulse_response(Complex s, const ChannelParams& p) {
    if (s.imag() == 0.0 && !(s.real() > -p.k_d()))
        throw BranchError("laplace_impulse_response: s on the branch cut");
    return p.k_f() / (s + p.k_b()) * detail::laplace_green_raw(p.a(), s, p);
}

/// Residual of the Laplace-domain surface boundary condition, normalized by
/// the characteristic derivative magnitude.  The radial derivative is a
/// central difference with Richardson extrapolation (steps h and h/2,
/// h = 1e-6 * a).
inline double check_boundary_condition(Complex s, const ChannelParams& p) {
    if (s.imag() == 0.0 && !(s.real() > -p.k_d()))
        throw BranchError("check_boundary_condition: s on the branch cut");
    const double a = p.a();
    const double h = 1e-6 * a;
    auto deriv = [&](double step) {
        return (detail::laplace_green_raw(a + step, s, p) -
                detail::laplace_green_raw(a - step, s, p)) /
               (2.0 * step);
    };
    const Complex d_h = deriv(h), d_h2 = deriv(0.5 * h);
    const Complex lhs = (4.0 * d_h2 - d_h) / 3.0;
    const double kD = p.derived_kD();
    const Complex pa = detail::laplace_green_raw(a, s, p);
    const Complex rhs = p.k_f() * s / (a * kD * s + p.k_b() * a * kD) * pa;
    const double scale = std::max(std::abs(pa) / a, std::abs(rhs));
    return std::abs(lhs - rhs) / scale;
}

/// Residual of the partial-fraction identity: the eta-weighted sum against
/// the reaction correction term of the Laplace solution.
inline double check_partial_fractions(Complex s, const ChannelParams& p,
                                      const analytic::RootTriple& rt) {
    const double pi = std::numbers::pi;
    const double a = p.a(), r0 = p.r0(), da = p.d_a();
    const double kD = p.derived_kD();
    const Complex w = detail::branch_sqrt(s, p.k_d());
    const Complex x = w / std::sqrt(da);
    const double r = r0;  // evaluation radius cancels; any r >= a works
    const Complex kernel = std::exp(-x * (r + r0 - 2.0 * a)) /
                           (4.0 * pi * r * r0 * std::sqrt(da) * w);
    const Complex pf_sum = (rt.eta1 / (rt.alpha + w) + rt.eta2 / (rt.beta + w) +
                            rt.eta3 / (rt.gamma + w)) *
                           kernel;
    const Complex reaction = kD + s * p.k_f() / (s + p.k_b());
    const Complex direct = reaction / (a * kD * x + reaction) * kernel;
    return std::abs(pf_sum - direct) / std::abs(direct);
}

/// Target of a numerical inversion: either the Green's function sampled at
/// one radius or the channel impulse response.
struct LaplaceEvaluator {
    enum class Target { GreenAtR, ImpulseResponse };

    ChannelParams params;
    Target target = Target::ImpulseResponse;
    double r = 0.0;

    static LaplaceEvaluator green_at(const ChannelParams& p, double r) {
        if (!(r >= p.a())) throw DomainError("LaplaceEvaluator: r < a");
        return {p, Target::GreenAtR, r};
    }
    static LaplaceEvaluator impulse(const ChannelParams& p) {
        return {p, Target::ImpulseResponse, 0.0};
    }

    Complex operator()(Complex s) const {
        return target == Target::GreenAtR
                   ? detail::laplace_green_raw(r, s, params)
                   : laplace_impulse_response(s, params);
    }
};

/// Fixed-Talbot inversion with M contour nodes.
template <class F>
double talbot(F&& f, double t, int m) {
    if (!(t > 0.0)) throw DomainError("talbot: t <= 0");
    const double pi = std::numbers::pi;
    const double r = 2.0 * m / (5.0 * t);
    double sum = 0.5 * std::exp(r * t) * std::real(f(Complex(r, 0.0)));
    for (int k = 1; k < m; ++k) {
        const double theta = k * pi / m;
        const double cot = std::cos(theta) / std::sin(theta);
        const Complex s(r * theta * cot, r * theta);
        const double sigma = theta + (theta * cot - 1.0) * cot;
        const Complex val = std::exp(s * t) * f(s) * Complex(1.0, sigma);
        if (!std::isfinite(val.real()) || !std::isfinite(val.imag()))
            throw ContourError("talbot: evaluator failed on contour");
        sum += val.real();
    }
    return sum * r / m;
}

/// Inversion with a node-doubling self-check (M vs 2M agreement).  The
/// default M balances truncation (~e^(-M)) against the e^(2M/5) roundoff
/// amplification of the contour terms in double precision; the M-node value
/// is returned because the doubled contour is the noisier of the two.
template <class F>
double invert_laplace(F&& f, double t, int m = 24) {
    const double v1 = talbot(f, t, m);
    const double v2 = talbot(f, t, 2 * m);
    const double scale = std::max({std::abs(v1), std::abs(v2), 1e-300});
    if (std::abs(v1 - v2) > 1e-6 * scale)
        throw ConvergenceError("invert_laplace: node-doubling check failed");
    return v1;
}

namespace detail {

// Minimal 128-bit complex arithmetic for the high-accuracy inversion path.
// The Talbot sum cancels down from terms of size exp(2M/5)*|F| to values as
// small as 1e-59, which is far beyond double roundoff; 113-bit significands
// leave ~15 digits after the worst-case cancellation on the supported grids.
struct QComplex {
    __float128 re, im;
};

inline const __float128 kQPi = acosq(-1.0);

inline QComplex qc(double re, double im = 0.0) {
    return {static_cast<__float128>(re), static_cast<__float128>(im)};
}
inline QComplex operator+(QComplex a, QComplex b) { return {a.re + b.re, a.im + b.im}; }
inline QComplex operator-(QComplex a, QComplex b) { return {a.re - b.re, a.im - b.im}; }
inline QComplex operator*(QComplex a, QComplex b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}
inline QComplex operator*(__float128 a, QComplex b) { return {a * b.re, a * b.im}; }
inline QComplex operator/(QComplex a, QComplex b) {
    const __float128 d = b.re * b.re + b.im * b.im;
    return {(a.re * b.re + a.im * b.im) / d, (a.im * b.re - a.re * b.im) / d};
}
inline QComplex qc_exp(QComplex z) {
    const __float128 m = expq(z.re);
    return {m * cosq(z.im), m * sinq(z.im)};
}
// Principal square root (non-negative real part), via the polar form.
inline QComplex qc_sqrt(QComplex z) {
    const __float128 m = sqrtq(hypotq(z.re, z.im));
    const __float128 half_arg = atan2q(z.im, z.re) / 2;
    QComplex w{m * cosq(half_arg), m * sinq(half_arg)};
    if (w.re < 0) { w.re = -w.re; w.im = -w.im; }
    return w;
}

// Laplace-domain integrated flux at the shifted argument s = u - shift,
// evaluated in 128-bit arithmetic.  Shifting by min(k_b, k_d) factors the
// e^(-shift*t) decay out of the contour sum, which would otherwise have to
// emerge from cancellation; all singularities stay in Re(u) <= 0.
inline QComplex q_impulse_transform(QComplex u, __float128 shift,
                                    const ChannelParams& p) {
    const __float128 a = p.a(), r0 = p.r0(), da = p.d_a();
    const __float128 kD = p.derived_kD(), kf = p.k_f(), kb = p.k_b(), kd = p.k_d();
    const QComplex s = u - QComplex{shift, 0};
    const QComplex x = qc_sqrt({(s.re + kd) / da, s.im / da});
    const QComplex den = (8 * kQPi * a * r0 * sqrtq(da)) * qc_sqrt({s.re + kd, s.im});
    const QComplex kernel = qc_exp({-x.re * (r0 - a), -x.im * (r0 - a)});
    const QComplex s_kb{s.re + kb, s.im};
    const QComplex reaction = QComplex{kD, 0} + (s * QComplex{kf, 0}) / s_kb;
    const QComplex green_a =
        (QComplex{2, 0} - (2 * reaction) / ((a * kD) * x + reaction)) * kernel / den;
    return (QComplex{kf, 0} / s_kb) * green_a;
}

inline __float128 q_talbot_impulse(double t, __float128 shift,
                                   const ChannelParams& p, int m) {
    const __float128 qt = t;
    const __float128 r = 2 * m / (5 * qt);
    __float128 sum =
        expq(r * qt) * q_impulse_transform({r, 0}, shift, p).re / 2;
    for (int k = 1; k < m; ++k) {
        const __float128 theta = k * kQPi / m;
        const __float128 cot = cosq(theta) / sinq(theta);
        const QComplex s{r * theta * cot, r * theta};
        const __float128 sigma = theta + (theta * cot - 1) * cot;
        const QComplex val =
            qc_exp({s.re * qt, s.im * qt}) * q_impulse_transform(s, shift, p);
        sum += val.re - sigma * val.im;
    }
    return sum * r / m;
}

} // namespace detail

/// Ground-truth channel impulse response by numerical inversion of the
/// Laplace-domain integrated flux.  Serves as the fallback when the cubic
/// roots are degenerate and as the cross-check oracle everywhere else.
///
/// The node count is adapted to the diffusion lag: the integrand's saddle
/// sits at sqrt(2M/5) ~ lambda = (r0-a)/sqrt(4 D_A t), so M ~ 2.5*lambda^2
/// keeps the contour sum free of catastrophic cancellation even where the
/// response is ~1e-59.  A second pass with M+32 nodes is the self-check.
inline double impulse_response_via_oracle(double t, const ChannelParams& p,
                                          int m = 32) {
    if (!(t > 0.0)) throw DomainError("impulse_response_via_oracle: t <= 0");
    if (p.k_f() == 0.0) return 0.0;
    const __float128 shift = std::min(p.k_b(), p.k_d());
    const double lambda = (p.r0() - p.a()) / std::sqrt(4.0 * p.d_a() * t);
    const double residual_decay = (p.k_d() - std::min(p.k_b(), p.k_d())) * t;
    const int nodes = std::max({m, static_cast<int>(std::ceil(2.5 * lambda * lambda)),
                                static_cast<int>(std::ceil(2.5 * residual_decay))});
    const __float128 v1 = detail::q_talbot_impulse(t, shift, p, nodes);
    const __float128 v2 = detail::q_talbot_impulse(t, shift, p, nodes + 32);
    const __float128 scale =
        std::max({fabsq(v1), fabsq(v2), static_cast<__float128>(1e-300)});
    if (!finiteq(v1) || !finiteq(v2))
        throw ContourError("impulse_response_via_oracle: non-finite contour sum");
    if (fabsq(v1 - v2) > 1e-8 * scale)
        throw ConvergenceError("impulse_response_via_oracle: self-check failed");
    return static_cast<double>(expq(-shift * static_cast<__float128>(t)) * v2);
}

} // namespace rrx::oracle
