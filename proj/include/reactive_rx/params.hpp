#pragma once

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "reactive_rx/errors.hpp"

namespace rrx {

/// Physical and chemical parameters of the channel, in strict SI units
/// (meters, seconds, m^3/s for the forward rate). Immutable once built;
/// the only way to obtain an instance is through make(), which validates
/// every invariant.
class ChannelParams {
public:
    /// Returns the complete list of invariant violations (empty if valid).
    static std::vector<std::string> check(double a, double r0, double d_a,
                                          double k_f, double k_b, double k_d,
                                          double n_a) {
        std::vector<std::string> errs;
        auto finite = [](double v) { return std::isfinite(v); };
        if (!finite(a) || !finite(r0) || !finite(d_a) || !finite(k_f) ||
            !finite(k_b) || !finite(k_d) || !finite(n_a))
            errs.push_back("NonFiniteError: all fields must be finite");
        if (finite(a) && a <= 0.0)
            errs.push_back("DomainError: receiver radius a must be > 0");
        if (finite(d_a) && d_a <= 0.0)
            errs.push_back("DomainError: diffusion coefficient D_A must be > 0");
        if (finite(k_f) && k_f < 0.0)
            errs.push_back("DomainError: forward rate k_f must be >= 0");
        if (finite(k_b) && k_b < 0.0)
            errs.push_back("DomainError: backward rate k_b must be >= 0");
        if (finite(k_d) && k_d < 0.0)
            errs.push_back("DomainError: degradation rate k_d must be >= 0");
        if (finite(n_a) && (n_a < 0.0 || n_a != std::floor(n_a)))
            errs.push_back("DomainError: molecule count N_A must be a non-negative integer");
        if (finite(a) && finite(r0) && a > 0.0 && r0 <= a)
            errs.push_back("GeometryError: transmitter distance r0 must exceed receiver radius a");
        return errs;
    }

    static ChannelParams make(double a, double r0, double d_a, double k_f,
                              double k_b, double k_d, double n_a) {
        auto errs = check(a, r0, d_a, k_f, k_b, k_d, n_a);
        if (!errs.empty()) {
            std::ostringstream os;
            os << "invalid channel parameters:";
            for (const auto& e : errs) os << "\n  " << e;
            const std::string msg = os.str();
            // Throw the most specific category when there is a single failure.
            if (errs.size() == 1) {
                if (errs[0].rfind("GeometryError", 0) == 0) throw GeometryError(msg);
                if (errs[0].rfind("NonFiniteError", 0) == 0) throw NonFiniteError(msg);
                throw DomainError(msg);
            }
            throw DomainError(msg);
        }
        return ChannelParams(a, r0, d_a, k_f, k_b, k_d, n_a);
    }

    double a() const { return a_; }
    double r0() const { return r0_; }
    double d_a() const { return d_a_; }
    double k_f() const { return k_f_; }
    double k_b() const { return k_b_; }
    double k_d() const { return k_d_; }
    double n_a() const { return n_a_; }

    /// Diffusion-limited rate constant k_D = 4*pi*a*D_A, m^3/s.
    double derived_kD() const { return 4.0 * std::numbers::pi * a_ * d_a_; }

    ChannelParams with_k_b(double k_b) const {
        return make(a_, r0_, d_a_, k_f_, k_b, k_d_, n_a_);
    }
    ChannelParams with_k_d(double k_d) const {
        return make(a_, r0_, d_a_, k_f_, k_b_, k_d, n_a_);
    }
    ChannelParams with_n_a(double n_a) const {
        return make(a_, r0_, d_a_, k_f_, k_b_, k_d_, n_a);
    }

private:
    ChannelParams(double a, double r0, double d_a, double k_f, double k_b,
                  double k_d, double n_a)
        : a_(a), r0_(r0), d_a_(d_a), k_f_(k_f), k_b_(k_b), k_d_(k_d), n_a_(n_a) {}

    double a_, r0_, d_a_, k_f_, k_b_, k_d_, n_a_;
};

} // namespace rrx
