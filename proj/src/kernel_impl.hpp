#pragma once

// Inline kernel evaluation shared by kernel.cpp and the operator assembly.

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "fracsing/error.hpp"
#include "fracsing/quadrature.hpp"

namespace fracsing::detail {

inline double int_pow(double x, int k) {
    double r = 1.0;
    for (int i = 0; i < k; ++i) r *= x;
    return r;
}

struct KernelShape {
    int dim;
    double alpha;
    double nu;           // (N + 2α)/2
    double omega;        // |S^{N−2}|
    double omega_full;   // |S^{N−1}|
    double c0;           // ∫_0^π sin^{N−2}

    KernelShape(int n, double a);
};

// ∫_{θ_lo}^π sin^{N−2}θ ((r−s)² + 4rs sin²(θ/2))^{−ν} dθ.
// The integrand peaks at θ = 0 with width ~ |r − s| / sqrt(rs); the range is
// split geometrically away from the peak so each piece is smooth at its scale.
inline QuadResult kernel_angular_integral(const KernelShape& k, double r, double s,
                                          double theta_lo, double rel_tol) {
    const double d = std::abs(r - s);
    const double d2 = d * d;
    const double rs4 = 4.0 * r * s;
    const int wpow = k.dim - 2;
    auto f = [&](double th) {
        const double sh = std::sin(0.5 * th);
        const double D = d2 + rs4 * sh * sh;
        double v = std::pow(D, -k.nu);
        if (wpow > 0) v *= int_pow(std::sin(th), wpow);
        return v;
    };
    const double pi = std::numbers::pi;
    const double sl = std::sin(0.5 * std::max(theta_lo, 0.0));
    const double width = std::sqrt((d2 + rs4 * sl * sl) / (r * s));
    if (!(width > 0.0)) throw Error(ErrorCode::DiagonalEvaluation, "kernel evaluated at r == s");
    QuadResult total;
    double lo = theta_lo;
    double hi = std::max(theta_lo, 0.0) + 4.0 * width;
    if (width < 0.05) {
        // Peak region [θ_lo, θ_lo + 4w], then doubling pieces up to π.
        while (lo < pi) {
            hi = std::min(hi, pi);
            if (hi - lo > 1e-300) {
                QuadResult q = integrate(f, lo, hi, 0.0, rel_tol * 0.25);
                total.value += q.value;
                total.error_estimate += q.error_estimate;
                total.evaluations += q.evaluations;
            }
            lo = hi;
            hi = lo + 2.0 * (lo - std::max(theta_lo, 0.0) + width);
        }
        return total;
    }
    return integrate(f, theta_lo, pi, 0.0, rel_tol);
}

// Truncated kernel: only points y with |y − r e₁| ≥ cutoff contribute.
inline double truncated_kernel_value(const KernelShape& k, double r, double s, double cutoff,
                                     double rel_tol) {
    const double d = std::abs(r - s);
    double theta_lo = 0.0;
    if (d < cutoff) {
        const double x = (cutoff * cutoff - d * d) / (4.0 * r * s);
        if (x >= 1.0) return 0.0;
        theta_lo = 2.0 * std::asin(std::sqrt(x));
    }
    const QuadResult q = kernel_angular_integral(k, r, s, theta_lo, rel_tol);
    return k.omega * int_pow(s, k.dim - 1) * q.value;
}

// K(r, s) = r^{−1−2α} K(1, s/r). With u = log(s/r) and σ = 2 sinh(u/2),
// h(u) = K(1, e^u)|σ|^{1+2α} is analytic away from u = 0, so it is stored as
// Chebyshev panels: geometric in |u| down to kMinLog, unit length beyond 1.
class KernelTable {
public:
    static constexpr int kDegree = 16;
    static constexpr double kMinLog = 1e-4;
    static constexpr double kMaxLog = 36.0;

    explicit KernelTable(const KernelShape& k);

    /// Full kernel K(r, s); falls back to direct quadrature when
    /// |log(s/r)| < kMinLog.
    double operator()(double r, double s) const;

private:
    using Coeffs = std::array<double, kDegree + 1>;
    struct Panel {
        double lo, hi;
        Coeffs c;
    };

    double h_direct(double u) const;
    double panel_value(const std::vector<Panel>& side, double au) const;

    KernelShape shape_;
    std::vector<Panel> pos_, neg_;  // u > 0 and u < 0, indexed by |u|
    double geometric_panels_ = 0;
    double tail_ = 0.0;             // |S^{N−2}| ∫ sin^{N−2}: leading coefficient as t → 0 or ∞
};

}  // namespace fracsing::detail
