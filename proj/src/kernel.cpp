#include "fracsing/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "fracsing/error.hpp"
#include "fracsing/quadrature.hpp"
#include "kernel_impl.hpp"

namespace fracsing {

using std::numbers::pi;

namespace detail {

KernelShape::KernelShape(int n, double a)
    : dim(n),
      alpha(a),
      nu(0.5 * (n + 2.0 * a)),
      omega(sphere_area(n - 2)),
      omega_full(sphere_area(n - 1)),
      c0(angular_mass(n)) {}

}  // namespace detail

double sphere_area(int k) {
    const double h = 0.5 * (k + 1);
    return 2.0 * std::pow(pi, h) / std::tgamma(h);
}

double angular_mass(int dim) { return sphere_area(dim - 1) / sphere_area(dim - 2); }

double riesz_normalization(int dim, double alpha) {
    return alpha * std::pow(4.0, alpha) * std::tgamma(0.5 * dim + alpha) /
           (std::pow(pi, 0.5 * dim) * std::tgamma(1.0 - alpha));
}

double reciprocal_gamma(double x) {
    if (x <= 0.0 && x == std::floor(x)) return 0.0;
    if (x > 0.5) {
        // lgamma is log|Γ|, Γ > 0 here.
        return std::exp(-std::lgamma(x));
    }
    // Reflection: 1/Γ(x) = sin(πx) Γ(1−x) / π, with Γ(1−x) > 0 for x ≤ 0.5.
    return std::sin(pi * x) * std::exp(std::lgamma(1.0 - x)) / pi;
}

namespace {

void check_tau(double tau, int dim) {
    if (!(tau > -dim && tau < 0.0))
        throw Error(ErrorCode::OutOfRange,
                    "tau=" + std::to_string(tau) + " outside (-N, 0) for N=" + std::to_string(dim));
}

// Moments ∫_0^π cos^k θ sin^{N−2} θ dθ for even k.
double cos_moment(int k, int dim) {
    const double a = 0.5 * (k + 1), b = 0.5 * (dim - 1);
    return std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

// F(r) = ∫_0^π [(1 + r² − 2r cosθ)^{τ/2} − 1] sin^{N−2}θ dθ, with
// dist = |1 − r| supplied exactly by the caller.
class CtauInner {
public:
    CtauInner(double tau, int dim) : m_(0.5 * tau), dim_(dim) {
        const double m = m_;
        const double b1 = m, b2 = m * (m - 1) / 2, b3 = b2 * (m - 2) / 3, b4 = b3 * (m - 3) / 4;
        const double M0 = cos_moment(0, dim), M2 = cos_moment(2, dim), M4 = cos_moment(4, dim);
        a2_ = b1 * M0 + 4 * b2 * M2;
        a4_ = b2 * M0 + 12 * b3 * M2 + 16 * b4 * M4;
    }

    double operator()(double r, double dist) const {
        if (r < 1e-3) {
            const double r2 = r * r;
            return r2 * (a2_ + a4_ * r2);
        }
        const double m = m_;
        const int wpow = dim_ - 2;
        const double d2 = dist * dist;
        auto term = [m](double q, double x) {
            return std::abs(x) < 0.5 ? std::expm1(m * std::log1p(x)) : std::pow(q, m) - 1.0;
        };
        // Pair θ with π − θ so the O(r) odd parts cancel pointwise.
        auto g = [&](double th) {
            const double c = std::cos(th);
            const double sh = std::sin(0.5 * th), ch = std::cos(0.5 * th);
            const double q1 = d2 + 4.0 * r * sh * sh;
            const double q2 = d2 + 4.0 * r * ch * ch;
            double v = term(q1, r * r - 2.0 * r * c) + term(q2, r * r + 2.0 * r * c);
            if (wpow > 0) v *= detail::int_pow(std::sin(th), wpow);
            return v;
        };
        const double abs_tol = 1e-13 * std::min(r, 1.0);
        const double peak = dist / std::sqrt(r);
        if (peak < 0.05) {
            // Near-singular peak at θ = 0 of width ~dist: geometric pieces.
            double total = 0.0, lo = 0.0, hi = 4.0 * peak;
            const double end = 0.5 * pi;
            while (lo < end) {
                hi = std::min(hi, end);
                total += integrate(g, lo, hi, abs_tol, 1e-12).value;
                lo = hi;
                hi = 2.0 * hi + peak;
            }
            return total;
        }
        return integrate(g, 0.0, 0.5 * pi, abs_tol, 1e-12).value;
    }

private:
    double m_;
    int dim_;
    double a2_ = 0.0, a4_ = 0.0;
};

}  // namespace

KernelValue c_tau(double tau, int dim, double alpha, double abs_tol, double rel_tol) {
    ModelParams{dim, alpha, 1.0}.validate();
    check_tau(tau, dim);
    const CtauInner inner(tau, dim);
    const double omega = sphere_area(dim - 2);
    const double s = -1.0 - 2.0 * alpha;
    const double atol = 0.25 * abs_tol;
    // Exponent of the |1 − r| singularity of F; substitute at least like a square root.
    const double g1 = std::min(tau + dim - 1.0, -0.5);

    KernelValue out;
    auto add = [&out](const QuadResult& q) {
        out.value += q.value;
        out.error_estimate += q.error_estimate;
    };
    try {
        // [0, 1/2]: F(r) r^{−1−2α} ~ r^{1−2α}.
        add(integrate_singular(
            [&](double r, double) { return inner(r, 1.0 - r) * std::pow(r, s); }, 0.0, 0.5,
            1.0 - 2.0 * alpha, Endpoint::Left, atol, rel_tol));
        add(integrate_singular([&](double r, double d) { return inner(r, d) * std::pow(r, s); },
                               0.5, 1.0, g1, Endpoint::Right, atol, rel_tol));
        add(integrate_singular([&](double r, double d) { return inner(r, d) * std::pow(r, s); },
                               1.0, 2.0, g1, Endpoint::Left, atol, rel_tol));
        // [2, ∞) via r = 1/t: ∫_0^{1/2} F(1/t) t^{2α−1} dt.
        add(integrate_singular(
            [&](double t, double) {
                const double r = 1.0 / t;
                return inner(r, r - 1.0) * std::pow(t, 2.0 * alpha - 1.0);
            },
            0.0, 0.5, 2.0 * alpha - 1.0, Endpoint::Left, atol, rel_tol));
    } catch (const NonConvergenceError& e) {
        throw NonConvergenceError(std::string("c_tau: ") + e.what(), e.best_value(),
                                  e.best_error());
    }
    out.value *= omega;
    out.error_estimate *= omega;
    return out;
}

double c_tau_oracle(double tau, int dim, double alpha) {
    ModelParams{dim, alpha, 1.0}.validate();
    check_tau(tau, dim);
    const double beta = -tau;
    const double n = dim;
    // λ(β) = 4^α Γ((β+2α)/2) Γ((N−β)/2) / [Γ(β/2) Γ((N−β−2α)/2)] for the
    // normalized operator; every argument except the last is positive.
    const double log_num = alpha * std::log(4.0) + std::lgamma(0.5 * (beta + 2 * alpha)) +
                           std::lgamma(0.5 * (n - beta)) - std::lgamma(0.5 * beta);
    const double lambda_norm = std::exp(log_num) * reciprocal_gamma(0.5 * (n - beta - 2 * alpha));
    return -lambda_norm / riesz_normalization(dim, alpha);
}

KernelValue angular_kernel(double r, double s, int dim, double alpha, double rel_tol) {
    if (!(r > 0.0) || !(s > 0.0))
        throw Error(ErrorCode::NonPositiveRadius, "angular_kernel needs r, s > 0");
    if (r == s) throw Error(ErrorCode::DiagonalEvaluation, "angular_kernel evaluated at r == s");
    const detail::KernelShape k(dim, alpha);
    const QuadResult q = detail::kernel_angular_integral(k, r, s, 0.0, rel_tol);
    const double scale = k.omega * detail::int_pow(s, dim - 1);
    return {scale * q.value, scale * q.error_estimate};
}

double truncated_kernel(double r, double s, double cutoff, int dim, double alpha,
                        double rel_tol) {
    if (!(r > 0.0) || !(s > 0.0))
        throw Error(ErrorCode::NonPositiveRadius, "truncated_kernel needs r, s > 0");
    if (!(cutoff > 0.0)) throw Error(ErrorCode::InvalidArgument, "cutoff must be > 0");
    const detail::KernelShape k(dim, alpha);
    return detail::truncated_kernel_value(k, r, s, cutoff, rel_tol);
}

double flap_power_exact(double tau, double r, const ModelParams& params) {
    params.validate();
    check_tau(tau, params.dim);
    if (!(r > 0.0)) throw Error(ErrorCode::NonPositiveRadius, "flap_power_exact needs r > 0");
    return -c_tau_oracle(tau, params.dim, params.alpha) * std::pow(r, tau - 2.0 * params.alpha);
}

KernelValue flap_radial(const std::function<double(double)>& phi, double r,
                        const ModelParams& params, double abs_tol, double rel_tol) {
    params.validate();
    if (!(r > 0.0)) throw Error(ErrorCode::NonPositiveRadius, "flap_radial needs r > 0");
    const int dim = params.dim;
    const double alpha = params.alpha;
    const double omega = sphere_area(dim - 2);
    const int wpow = dim - 2;
    const double phi_r = phi(r);

    // G(ρ) = ∫_0^{π/2} [2φ(r) − φ(s₊) − φ(s₋)] sin^{N−2}θ dθ.
    auto G = [&](double rho) {
        const double gap = r - rho;
        auto g = [&](double th) {
            const double sh = std::sin(0.5 * th);
            const double cross = 4.0 * r * rho * sh * sh;
            const double sp = std::sqrt((r + rho) * (r + rho) - cross);
            const double sm = std::sqrt(gap * gap + cross);
            double v = 2.0 * phi_r - phi(sp) - phi(sm);
            if (wpow > 0) v *= detail::int_pow(std::sin(th), wpow);
            return v;
        };
        // The answer can cancel far below the integrand's size, so the
        // absolute tolerance is pinned to a rough ∫|g| first.
        const double width = std::abs(r - rho) / std::sqrt(r * rho);
        auto pieces = [&](auto&& h, double abs_tol, double rel_tol) {
            if (width >= 0.05) return integrate(h, 0.0, 0.5 * pi, abs_tol, rel_tol).value;
            double total = 0.0, lo = 0.0, hi = 4.0 * width;
            while (lo < 0.5 * pi) {
                hi = std::min(hi, 0.5 * pi);
                total += integrate(h, lo, hi, abs_tol, rel_tol).value;
                lo = hi;
                hi = 2.0 * hi + width;
            }
            return total;
        };
        // Roundoff floor of the second difference itself.
        const double size =
            2.0 * std::abs(phi_r) + std::abs(phi(r + rho)) + std::abs(phi(std::abs(gap)));
        const double floor = std::isfinite(size) ? 1e-14 * size : 1e-300;
        const double mass =
            pieces([&](double th) { return std::abs(g(th)); }, floor, 1e-2);
        if (mass == 0.0) return 0.0;
        return pieces(g, std::max(1e-12 * mass, floor), 1e-10);
    };

    const double s = -1.0 - 2.0 * alpha;
    // Breakpoints where the sphere around r e₁ touches 0 or the unit sphere.
    std::vector<double> cuts = {r, std::abs(1.0 - r), 1.0 + r};
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::remove_if(cuts.begin(), cuts.end(), [](double c) { return c <= 0.0; }),
               cuts.end());
    const double first = 0.5 * cuts.front();
    const double last = 2.0 * cuts.back();

    KernelValue out;
    auto add = [&out](const QuadResult& q) {
        out.value += q.value;
        out.error_estimate += q.error_estimate;
    };
    const double atol = abs_tol / (cuts.size() + 3);
    double lo = first;
    std::vector<double> pts = cuts;
    pts.push_back(last);
    for (double hi : pts) {
        if (hi <= lo) continue;
        add(integrate([&](double rho) { return G(rho) * std::pow(rho, s); }, lo, hi, atol,
                      rel_tol));
        lo = hi;
    }
    add(integrate_singular(
        [&](double t, double) { return G(1.0 / t) * std::pow(t, 2.0 * alpha - 1.0); }, 0.0,
        1.0 / last, 2.0 * alpha - 1.0, Endpoint::Left, atol, rel_tol));
    // Below rho_q the second difference is lost in roundoff; use its
    // quadratic leading term G(ρ) ≈ G(rho_q)(ρ/rho_q)² there instead.
    const double smooth_scale = r == 1.0 ? r : std::min(r, std::abs(1.0 - r));
    const double g_floor = 1e-7 * 4.0 * std::abs(phi_r);
    double rho_q = 0.5 * first;
    while (rho_q > 1e-3 * smooth_scale && std::abs(G(0.5 * rho_q)) > g_floor) rho_q *= 0.5;
    add(integrate([&](double rho) { return G(rho) * std::pow(rho, s); }, rho_q, first, atol,
                  rel_tol));
    out.value += G(rho_q) * std::pow(rho_q, -2.0 * alpha) / (2.0 - 2.0 * alpha);
    out.value *= omega;
    out.error_estimate *= omega;
    return out;
}

KernelValue flap_montecarlo(const std::function<double(double)>& phi, double r,
                            const ModelParams& params, std::int64_t samples, std::uint64_t seed) {
    params.validate();
    if (samples < 10000) throw Error(ErrorCode::InvalidArgument, "flap_montecarlo needs >= 1e4 samples");
    if (!(r > 0.0)) throw Error(ErrorCode::NonPositiveRadius, "flap_montecarlo needs r > 0");
    const int dim = params.dim;
    const double alpha = params.alpha;
    const double area = sphere_area(dim - 1);
    const double split = 0.5 * r;
    const double phi_r = phi(r);
    if (!std::isfinite(phi_r)) throw Error(ErrorCode::NonFiniteEvaluation, "phi(r) not finite");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto direction_cos = [&]() {
        double first = normal(rng), norm2 = first * first;
        for (int i = 1; i < dim; ++i) {
            const double g = normal(rng);
            norm2 += g * g;
        }
        return first / std::sqrt(norm2);
    };
    auto second_difference = [&](double rho, double c) {
        const double base = r * r + rho * rho;
        const double sp = std::sqrt(base + 2.0 * r * rho * c);
        const double sm = std::sqrt(std::max(base - 2.0 * r * rho * c, 0.0));
        const double v = phi_r - 0.5 * (phi(sp) + phi(sm));
        if (!std::isfinite(v))
            throw Error(ErrorCode::NonFiniteEvaluation, "phi not finite at sampled point");
        return v;
    };

    const std::int64_t n_in = samples / 2;
    const std::int64_t n_out = samples - n_in;
    // Inner shell ρ < split with density ∝ ρ^{1−2α}.
    double mean_in = 0.0, m2_in = 0.0;
    const double w_in = area * std::pow(split, 2.0 - 2.0 * alpha) / (2.0 - 2.0 * alpha);
    for (std::int64_t i = 0; i < n_in; ++i) {
        const double u = 1.0 - unif(rng);
        const double rho = split * std::pow(u, 1.0 / (2.0 - 2.0 * alpha));
        const double x = w_in * second_difference(rho, direction_cos()) / (rho * rho);
        const double delta = x - mean_in;
        mean_in += delta / static_cast<double>(i + 1);
        m2_in += delta * (x - mean_in);
    }
    // Outer region ρ > split with density ∝ ρ^{−1−2α}.
    double mean_out = 0.0, m2_out = 0.0;
    const double w_out = area / (2.0 * alpha * std::pow(split, 2.0 * alpha));
    for (std::int64_t i = 0; i < n_out; ++i) {
        const double u = 1.0 - unif(rng);
        const double rho = split * std::pow(u, -1.0 / (2.0 * alpha));
        const double x = w_out * second_difference(rho, direction_cos());
        const double delta = x - mean_out;
        mean_out += delta / static_cast<double>(i + 1);
        m2_out += delta * (x - mean_out);
    }
    const double var_in = m2_in / static_cast<double>(n_in - 1);
    const double var_out = m2_out / static_cast<double>(n_out - 1);
    return {mean_in + mean_out,
            std::sqrt(var_in / static_cast<double>(n_in) + var_out / static_cast<double>(n_out))};
}

double torsion_constant(int dim, double alpha) {
    ModelParams{dim, alpha, 1.0}.validate();
    const double n2 = 0.5 * dim;
    return riesz_normalization(dim, alpha) * std::tgamma(n2) /
           (std::pow(4.0, alpha) * std::tgamma(1.0 + alpha) * std::tgamma(n2 + alpha));
}

double exact_torsion(double r, int dim, double alpha) {
    if (r >= 1.0) return 0.0;
    return torsion_constant(dim, alpha) * std::pow((1.0 - r) * (1.0 + r), alpha);
}

}  // namespace fracsing

namespace fracsing::detail {

KernelTable::KernelTable(const KernelShape& k) : shape_(k), tail_(k.omega * k.c0) {
    // Panels [kMinLog·2^j, kMinLog·2^{j+1}] up to 1, then [m, m+1] up to kMaxLog.
    std::vector<std::pair<double, double>> spans;
    double a = kMinLog;
    while (a < 1.0) {
        const double b = std::min(2.0 * a, 1.0);
        spans.emplace_back(a, b);
        a = b;
    }
    geometric_panels_ = static_cast<double>(spans.size());
    for (double m = 1.0; m < kMaxLog; m += 1.0) spans.emplace_back(m, m + 1.0);

    constexpr int n = kDegree + 1;
    std::array<double, n> nodes{};
    for (int j = 0; j < n; ++j) nodes[j] = std::cos(pi * (j + 0.5) / n);
    for (int side = 0; side < 2; ++side) {
        auto& panels = side == 0 ? pos_ : neg_;
        const double sign = side == 0 ? 1.0 : -1.0;
        for (const auto& [lo, hi] : spans) {
            std::array<double, n> vals{};
            for (int j = 0; j < n; ++j) {
                const double au = 0.5 * (lo + hi) + 0.5 * (hi - lo) * nodes[j];
                vals[j] = h_direct(sign * au);
            }
            Panel p{lo, hi, {}};
            for (int m = 0; m < n; ++m) {
                double acc = 0.0;
                for (int j = 0; j < n; ++j) acc += vals[j] * std::cos(pi * m * (j + 0.5) / n);
                p.c[m] = (m == 0 ? 1.0 : 2.0) * acc / n;
            }
            panels.push_back(p);
        }
    }
}

double KernelTable::h_direct(double u) const {
    const double t = std::exp(u);
    const double sigma = std::abs(2.0 * std::sinh(0.5 * u));
    const QuadResult q = kernel_angular_integral(shape_, 1.0, t, 0.0, 1e-13);
    return shape_.omega * int_pow(t, shape_.dim - 1) * q.value *
           std::pow(sigma, 1.0 + 2.0 * shape_.alpha);
}

double KernelTable::panel_value(const std::vector<Panel>& side, double au) const {
    std::size_t idx;
    if (au < 1.0) {
        idx = static_cast<std::size_t>(std::floor(std::log2(au / kMinLog)));
        idx = std::min(idx, static_cast<std::size_t>(geometric_panels_) - 1);
    } else {
        idx = static_cast<std::size_t>(geometric_panels_) + static_cast<std::size_t>(au - 1.0);
    }
    idx = std::min(idx, side.size() - 1);
    const Panel& p = side[idx];
    const double x = (2.0 * au - p.lo - p.hi) / (p.hi - p.lo);
    // Clenshaw recurrence.
    double b1 = 0.0, b2 = 0.0;
    for (int m = kDegree; m >= 1; --m) {
        const double b0 = 2.0 * x * b1 - b2 + p.c[m];
        b2 = b1;
        b1 = b0;
    }
    return x * b1 - b2 + p.c[0];
}

double KernelTable::operator()(double r, double s) const {
    const double u = std::log(s / r);
    const double au = std::abs(u);
    const double two_a = 2.0 * shape_.alpha;
    if (au < kMinLog) {
        const QuadResult q = kernel_angular_integral(shape_, r, s, 0.0, 1e-10);
        return shape_.omega * int_pow(s, shape_.dim - 1) * q.value;
    }
    const double scale = std::pow(r, -1.0 - two_a);
    if (au >= kMaxLog) {
        // Only the leading power survives at these ratios.
        const double t = std::exp(u);
        return u > 0 ? scale * tail_ * std::pow(t, -1.0 - two_a)
                     : scale * tail_ * int_pow(t, shape_.dim - 1);
    }
    const double h = panel_value(u > 0 ? pos_ : neg_, au);
    const double sigma = std::abs(2.0 * std::sinh(0.5 * u));
    return scale * h * std::pow(sigma, -1.0 - two_a);
}

}  // namespace fracsing::detail
