#pragma once

#include <cmath>
#include <functional>

#include "reactive_rx/errors.hpp"

namespace rrx::quad {

namespace detail {

template <class F>
double simpson(F&& f, double a, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <class F>
double adaptive(F&& f, double a, double b, double fa, double fm, double fb,
                double whole, double tol, int depth) {
    if (depth > 60) throw QuadratureError("adaptive Simpson: recursion limit");
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(f, a, m, fa, flm, fm);
    const double right = simpson(f, m, b, fm, frm, fb);
    const double delta = left + right - whole;
    if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
           adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
}

} // namespace detail

/// Adaptive Simpson quadrature over [a, b].  tol is treated as an absolute
/// tolerance on the result; pass rel_tol * |estimate| when a relative bound
/// is wanted (integrate() below does this in two passes).
template <class F>
double integrate_abs(F&& f, double a, double b, double abs_tol) {
    if (!(b >= a)) throw QuadratureError("integrate: inverted interval");
    if (a == b) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = detail::simpson(f, a, b, fa, fm, fb);
    return detail::adaptive(f, a, b, fa, fm, fb, whole, abs_tol, 0);
}

/// Composite Simpson on a fixed uniform grid (n even intervals).
template <class F>
double composite_simpson(F&& f, double a, double b, int n) {
    if (n % 2 != 0) ++n;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

/// Two-pass adaptive Simpson with a relative tolerance target: a coarse
/// composite pass fixes the magnitude scale, the adaptive pass refines.
template <class F>
double integrate(F&& f, double a, double b, double rel_tol,
                 double abs_floor = 1e-300) {
    if (a == b) return 0.0;
    double scale = 0.0;
    const int n = 256;
    const double h = (b - a) / n;
    for (int i = 0; i < n; ++i)
        scale += std::abs(f(a + (i + 0.5) * h)) * h;
    const double tol = std::max(scale * rel_tol, abs_floor);
    return integrate_abs(f, a, b, tol);
}

} // namespace rrx::quad
