#pragma once

// Adaptive Gauss–Kronrod (7/15) integration with global bisection, plus a
// power-substitution variant for integrands with a known algebraic endpoint
// singularity |x - e|^gamma.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "fracsing/error.hpp"

namespace fracsing {

struct QuadResult {
    double value = 0.0;
    double error_estimate = 0.0;  // absolute
    int evaluations = 0;
};

enum class Endpoint { Left, Right };

inline constexpr int kDefaultMaxIntervals = 10000;

QuadResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                              double abs_tol, double rel_tol,
                              int max_intervals = kDefaultMaxIntervals);

/// Integrates f over [a, b] where f behaves like |x - e|^gamma near the chosen
/// endpoint e. The substitution x = e ± (b - a) t^{1/(1+gamma)} removes the
/// singularity before handing off to the adaptive rule.
QuadResult integrate_endpoint_singular(const std::function<double(double)>& f, double a,
                                       double b, double gamma, Endpoint endpoint,
                                       double abs_tol, double rel_tol = 0.0,
                                       int max_intervals = kDefaultMaxIntervals);

/// Same as above, but f(x, d) also receives d = |x - e| computed without
/// cancellation, so integrands can stay accurate arbitrarily close to e.
QuadResult integrate_endpoint_singular_d(const std::function<double(double, double)>& f,
                                         double a, double b, double gamma, Endpoint endpoint,
                                         double abs_tol, double rel_tol = 0.0,
                                         int max_intervals = kDefaultMaxIntervals);

namespace detail {

inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <std::size_t K>
struct Rule {
    std::array<double, K> value{};
    std::array<double, K> error{};
};

inline double max_error(const std::array<double, 1>& e) { return e[0]; }

template <std::size_t K>
double max_error(const std::array<double, K>& e) {
    double m = 0.0;
    for (double x : e) m = std::max(m, x);
    return m;
}

// QUADPACK qk15 applied componentwise to a K-vector integrand.
template <std::size_t K, class F>
Rule<K> gk15(F& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    std::array<std::array<double, K>, 15> fv{};
    fv[7] = f(center);
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kXgk[j];
        fv[j] = f(center - dx);
        fv[14 - j] = f(center + dx);
    }
    Rule<K> out;
    for (std::size_t c = 0; c < K; ++c) {
        double resk = fv[7][c] * kWgk[7];
        double resg = fv[7][c] * kWg[3];
        double resabs = std::abs(resk);
        for (int j = 0; j < 7; ++j) {
            const double s = fv[j][c] + fv[14 - j][c];
            resk += kWgk[j] * s;
            resabs += kWgk[j] * (std::abs(fv[j][c]) + std::abs(fv[14 - j][c]));
            if (j % 2 == 1) resg += kWg[j / 2] * s;
        }
        const double reskh = 0.5 * resk;
        double resasc = kWgk[7] * std::abs(fv[7][c] - reskh);
        for (int j = 0; j < 7; ++j)
            resasc += kWgk[j] * (std::abs(fv[j][c] - reskh) + std::abs(fv[14 - j][c] - reskh));
        const double h = std::abs(half);
        double err = std::abs((resk - resg) * half);
        resasc *= h;
        resabs *= h;
        if (resasc != 0.0 && err != 0.0)
            err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
        constexpr double eps = std::numeric_limits<double>::epsilon();
        constexpr double tiny = std::numeric_limits<double>::min();
        if (resabs > tiny / (50.0 * eps)) err = std::max(50.0 * eps * resabs, err);
        out.value[c] = resk * half;
        out.error[c] = err;
    }
    return out;
}

template <std::size_t K>
struct Segment {
    double a, b;
    Rule<K> rule;
    double key;  // max component error
};

template <std::size_t K>
struct AdaptiveResult {
    std::array<double, K> value{};
    std::array<double, K> error{};
    int evaluations = 0;
    bool converged = false;
};

// Global adaptive bisection: always split the segment with the largest error.
// Stops when every component satisfies err <= max(abs_tol, rel_tol*|value|).
template <std::size_t K, class F>
AdaptiveResult<K> adaptive(F&& f, double a, double b, double abs_tol, double rel_tol,
                           int max_intervals) {
    auto checked = [&f](double x) {
        std::array<double, K> v;
        if constexpr (K == 1) {
            v[0] = f(x);
        } else {
            v = f(x);
        }
        for (double c : v) {
            if (!std::isfinite(c))
                throw Error(ErrorCode::NonFiniteEvaluation,
                            "integrand not finite at x=" + std::to_string(x));
        }
        return v;
    };
    auto cmp = [](const Segment<K>& l, const Segment<K>& r) { return l.key < r.key; };
    std::vector<Segment<K>> heap;
    heap.reserve(64);
    AdaptiveResult<K> res;
    {
        Rule<K> r = gk15<K>(checked, a, b);
        res.evaluations += 15;
        heap.push_back({a, b, r, max_error(r.error)});
        res.value = r.value;
        res.error = r.error;
    }
    auto done = [&]() {
        for (std::size_t c = 0; c < K; ++c) {
            if (res.error[c] > std::max(abs_tol, rel_tol * std::abs(res.value[c]))) return false;
        }
        return true;
    };
    int since_resum = 0;
    while (!done()) {
        if (static_cast<int>(heap.size()) >= max_intervals) {
            res.converged = false;
            return res;
        }
        std::pop_heap(heap.begin(), heap.end(), cmp);
        Segment<K> s = heap.back();
        heap.pop_back();
        const double mid = 0.5 * (s.a + s.b);
        if (!(mid > s.a && mid < s.b)) {
            // Interval can no longer be split in floating point.
            heap.push_back(s);
            std::push_heap(heap.begin(), heap.end(), cmp);
            res.converged = false;
            return res;
        }
        Rule<K> left = gk15<K>(checked, s.a, mid);
        Rule<K> right = gk15<K>(checked, mid, s.b);
        res.evaluations += 30;
        for (std::size_t c = 0; c < K; ++c) {
            res.value[c] += left.value[c] + right.value[c] - s.rule.value[c];
            res.error[c] += left.error[c] + right.error[c] - s.rule.error[c];
        }
        heap.push_back({s.a, mid, left, max_error(left.error)});
        std::push_heap(heap.begin(), heap.end(), cmp);
        heap.push_back({mid, s.b, right, max_error(right.error)});
        std::push_heap(heap.begin(), heap.end(), cmp);
        if (++since_resum == 50) {
            // Re-sum to stop drift in the running totals.
            since_resum = 0;
            res.value = {};
            res.error = {};
            for (const auto& seg : heap) {
                for (std::size_t c = 0; c < K; ++c) {
                    res.value[c] += seg.rule.value[c];
                    res.error[c] += seg.rule.error[c];
                }
            }
        }
    }
    res.converged = true;
    return res;
}

}  // namespace detail

/// Header-only fast path for hot loops: returns value and error, throwing
/// NonConvergenceError when the budget is exhausted.
template <class F>
QuadResult integrate(F&& f, double a, double b, double abs_tol, double rel_tol,
                     int max_intervals = kDefaultMaxIntervals) {
    auto r = detail::adaptive<1>(std::forward<F>(f), a, b, abs_tol, rel_tol, max_intervals);
    if (!r.converged)
        throw NonConvergenceError("adaptive quadrature budget exhausted on [" +
                                      std::to_string(a) + ", " + std::to_string(b) + "]",
                                  r.value[0], r.error[0]);
    return {r.value[0], r.error[0], r.evaluations};
}

/// K-component version; all components share nodes.
template <std::size_t K, class F>
std::array<QuadResult, K> integrate_vec(F&& f, double a, double b, double abs_tol,
                                        double rel_tol, int max_intervals = kDefaultMaxIntervals) {
    auto r = detail::adaptive<K>(std::forward<F>(f), a, b, abs_tol, rel_tol, max_intervals);
    if (!r.converged)
        throw NonConvergenceError("adaptive quadrature budget exhausted", r.value[0], r.error[0]);
    std::array<QuadResult, K> out;
    for (std::size_t c = 0; c < K; ++c) out[c] = {r.value[c], r.error[c], r.evaluations};
    return out;
}

/// Template counterpart of integrate_endpoint_singular_d.
template <class F>
QuadResult integrate_singular(F&& f, double a, double b, double gamma, Endpoint endpoint,
                              double abs_tol, double rel_tol,
                              int max_intervals = kDefaultMaxIntervals) {
    if (!(gamma > -1.0))
        throw Error(ErrorCode::NonIntegrable,
                    "endpoint exponent gamma=" + std::to_string(gamma) + " <= -1");
    if (!(a < b)) throw Error(ErrorCode::InvalidArgument, "integration bounds require a < b");
    const double len = b - a;
    const double beta = 1.0 / (1.0 + gamma);
    auto g = [&](double t) {
        const double d = len * std::pow(t, beta);
        const double x = endpoint == Endpoint::Left ? a + d : b - d;
        const double jac = len * beta * std::pow(t, beta - 1.0);
        return f(x, d) * jac;
    };
    return integrate(g, 0.0, 1.0, abs_tol, rel_tol, max_intervals);
}

/// Vector form of integrate_singular; f(x, d) returns std::array<double, K>.
template <std::size_t K, class F>
std::array<QuadResult, K> integrate_singular_vec(F&& f, double a, double b, double gamma,
                                                 Endpoint endpoint, double abs_tol,
                                                 double rel_tol,
                                                 int max_intervals = kDefaultMaxIntervals) {
    if (!(gamma > -1.0))
        throw Error(ErrorCode::NonIntegrable,
                    "endpoint exponent gamma=" + std::to_string(gamma) + " <= -1");
    if (!(a < b)) throw Error(ErrorCode::InvalidArgument, "integration bounds require a < b");
    const double len = b - a;
    const double beta = 1.0 / (1.0 + gamma);
    auto g = [&](double t) {
        const double d = len * std::pow(t, beta);
        const double x = endpoint == Endpoint::Left ? a + d : b - d;
        const double jac = len * beta * std::pow(t, beta - 1.0);
        std::array<double, K> v = f(x, d);
        for (double& c : v) c *= jac;
        return v;
    };
    return integrate_vec<K>(g, 0.0, 1.0, abs_tol, rel_tol, max_intervals);
}

}  // namespace fracsing
