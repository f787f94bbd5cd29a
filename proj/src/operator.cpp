#include "fracsing/operator.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numbers>
#include <string>
#include <thread>

#include "fracsing/error.hpp"
#include "fracsing/kernel.hpp"
#include "fracsing/quadrature.hpp"
#include "kernel_impl.hpp"

namespace fracsing {

namespace {

using std::numbers::pi;
using Pair = std::array<double, 2>;

constexpr int kMaxGauss = 20;
constexpr int kInsideGauss = 12;

struct GaussRule {
    std::vector<double> x, w;  // on [0, 1]
};

// Golub–Welsch: nodes are the eigenvalues of the Legendre Jacobi matrix.
const std::array<GaussRule, kMaxGauss + 1>& gauss_table() {
    static const std::array<GaussRule, kMaxGauss + 1> table = [] {
        std::array<GaussRule, kMaxGauss + 1> t;
        for (int n = 1; n <= kMaxGauss; ++n) {
            Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
            for (int k = 1; k < n; ++k) {
                const double b = k / std::sqrt(4.0 * k * k - 1.0);
                J(k, k - 1) = J(k - 1, k) = b;
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
            t[n].x.resize(n);
            t[n].w.resize(n);
            for (int k = 0; k < n; ++k) {
                const double v0 = es.eigenvectors()(0, k);
                t[n].x[k] = 0.5 * (es.eigenvalues()(k) + 1.0);
                t[n].w[k] = v0 * v0;  // weights sum to 1 on [0, 1]
            }
        }
        return t;
    }();
    return table;
}

// Points needed so the error from a pole at distance d from an element of
// length h stays near 1e-11 (Bernstein ellipse bound). 0 means "adapt".
int gauss_points(double d, double h) {
    if (d < 0.25 * h) return 0;
    const double x = 1.0 + 2.0 * d / h;
    const double rho = x + std::sqrt(x * x - 1.0);
    const int n = static_cast<int>(std::ceil(12.7 / std::log(rho)));
    return n > kMaxGauss ? 0 : std::max(n, 2);
}

double exterior_distance(double r, double cos_t) {
    const double sin2 = std::max(0.0, 1.0 - cos_t * cos_t);
    const double root = std::sqrt(1.0 - r * r * sin2);
    if (cos_t >= 0.0) return (1.0 - r) * (1.0 + r) / (r * cos_t + root);
    return -r * cos_t + root;
}

struct RowResult {
    std::vector<double> p;  // hat integrals against interior nodes
    double p_eps = 0.0, p_one = 0.0, mass_in = 0.0, mass_ext = 0.0;
    double inner_load = 0.0;
    double c_left = 0.0, c_mid = 0.0, c_right = 0.0;
    double delta = 0.0;
};

class RowAssembler {
public:
    RowAssembler(const RadialGrid& g, const ModelParams& p, const ProfileSpec& inner,
                 const AssemblyOptions& o)
        : grid_(g), params_(p), inner_(inner), opt_(o), shape_(p.dim, p.alpha), table_(shape_) {}

    double cutoff(int i) const {
        const double r = grid_.nodes[i];
        const double hm = r - grid_.left_of(i);
        const double hp = grid_.right_of(i) - r;
        return std::min({opt_.near_cells * std::min(hm, hp), r - grid_.eps, 1.0 - r});
    }

    double kernel(double r, double s, double delta) const {
        if (std::abs(r - s) >= delta) return table_(r, s);
        return detail::truncated_kernel_value(shape_, r, s, delta, opt_.rel_tol);
    }

    RowResult row(int i) const {
        const int n = grid_.size();
        const double r = grid_.nodes[i];
        RowResult out;
        out.p.assign(n, 0.0);
        out.delta = cutoff(i);
        const double delta = out.delta;

        auto deposit = [&](int e, const Pair& v) {
            // Element e spans [left_of(e), node e]; e == n ends at the unit sphere.
            if (e == 0)
                out.p_eps += v[0];
            else
                out.p[e - 1] += v[0];
            if (e == n)
                out.p_one += v[1];
            else
                out.p[e] += v[1];
        };
        for (int e = 0; e <= n; ++e) {
            const double a = grid_.left_of(e);
            const double b = e == n ? 1.0 : grid_.nodes[e];
            deposit(e, element(r, delta, a, b));
        }

        out.mass_ext = exterior_mass(r, delta);
        inner_integrals(r, delta, inner_, out.mass_in, out.inner_load);

        const double hm = r - grid_.left_of(i);
        const double hp = grid_.right_of(i) - r;
        const NearField nf = near_field_moments(r, delta, params_.dim, params_.alpha, opt_.rel_tol);
        // −A1·D1 − ½A2·D2 with D1, D2 the three-point derivatives.
        out.c_left = (nf.a1 * hp - nf.a2) / (hm * (hm + hp));
        out.c_right = -(nf.a1 * hm + nf.a2) / (hp * (hm + hp));
        out.c_mid = -(out.c_left + out.c_right);
        return out;
    }

    // (∫K_δ L_a, ∫K_δ L_b) over [a, b] with L_a, L_b the two linear shape functions.
    Pair element(double r, double delta, double a, double b) const {
        const double h = b - a;
        const double lo = r - delta, hi = r + delta;
        if (b <= lo || a >= hi) {
            const double d = b <= lo ? r - b : a - r;
            const int m = gauss_points(d, h);
            if (m > 0) {
                const GaussRule& g = gauss_table()[m];
                Pair v{0.0, 0.0};
                for (int q = 0; q < m; ++q) {
                    const double t = g.x[q];
                    const double k = g.w[q] * kernel(r, a + h * t, delta);
                    v[0] += k * (1.0 - t);
                    v[1] += k * t;
                }
                return {v[0] * h, v[1] * h};
            }
        }
        // Split at s = r ± δ, where K_δ has square-root kinks, and at s = r.
        std::array<double, 5> cuts{};
        int nc = 0;
        cuts[nc++] = a;
        for (double c : {lo, r, hi})
            if (c > a && c < b) cuts[nc++] = c;
        cuts[nc++] = b;
        Pair v{0.0, 0.0};
        const double scale = std::pow(delta, -2.0 * params_.alpha);
        auto f = [&](double s, double) -> Pair {
            const double kv = kernel(r, s, delta);
            const double t = (s - a) / h;
            return {kv * (1.0 - t), kv * t};
        };
        for (int k = 0; k + 1 < nc; ++k) {
            const double x0 = cuts[k], x1 = cuts[k + 1];
            const bool inside = x0 >= lo && x1 <= hi;
            const double len = x1 - x0;
            Pair q{0.0, 0.0};
            if (inside) {
                // K_δ is smooth inside the ball apart from the square root at r ± δ;
                // s = x0 + len·t² (or its mirror) absorbs it.
                const bool left_kink = x0 == lo, right_kink = x1 == hi;
                const GaussRule& g = gauss_table()[kInsideGauss];
                for (int j = 0; j < kInsideGauss; ++j) {
                    double t = g.x[j], jac = len * g.w[j];
                    double s;
                    if (left_kink) {
                        s = x0 + len * t * t;
                        jac *= 2.0 * t;
                    } else if (right_kink) {
                        s = x1 - len * t * t;
                        jac *= 2.0 * t;
                    } else {
                        s = x0 + len * t;
                    }
                    const Pair fv = f(s, 0.0);
                    q[0] += jac * fv[0];
                    q[1] += jac * fv[1];
                }
            } else {
                const double d = x1 <= lo ? r - x1 : x0 - r;
                const int m = gauss_points(d, len);
                if (m > 0) {
                    const GaussRule& g = gauss_table()[m];
                    for (int j = 0; j < m; ++j) {
                        const Pair fv = f(x0 + len * g.x[j], 0.0);
                        q[0] += len * g.w[j] * fv[0];
                        q[1] += len * g.w[j] * fv[1];
                    }
                } else {
                    auto a2 = integrate_vec<2>([&](double x) { return f(x, 0.0); }, x0, x1,
                                               1e-13 * scale, opt_.rel_tol);
                    q = {a2[0].value, a2[1].value};
                }
            }
            v[0] += q[0];
            v[1] += q[1];
        }
        return v;
    }

    // |S^{N−2}| ∫_0^π sin^{N−2}θ ρ*(θ)^{−2α}/(2α) dθ: the kernel mass outside the ball.
    double exterior_mass(double r, double delta) const {
        const double two_a = 2.0 * params_.alpha;
        const int wpow = params_.dim - 2;
        auto f = [&](double th) {
            double v = std::pow(exterior_distance(r, std::cos(th)), -two_a) / two_a;
            if (wpow > 0) v *= detail::int_pow(std::sin(th), wpow);
            return v;
        };
        // The integrand peaks at θ = 0 with width ~ sqrt(1 − r).
        const double w = std::sqrt(1.0 - r);
        double total = 0.0;
        double lo = 0.0;
        const double scale = std::pow(delta, -two_a);
        for (double hi : {std::min(4.0 * w, pi), pi}) {
            if (hi > lo) total += integrate(f, lo, hi, 1e-14 * scale, opt_.rel_tol).value;
            lo = hi;
        }
        return shape_.omega * total;
    }

    // ∫_0^ε K_δ ds and ∫_0^ε φ K_δ ds.
    void inner_integrals(double r, double delta, const ProfileSpec& phi, double& mass,
                         double& load) const {
        const double eps = grid_.eps;
        const double scale = std::pow(delta, -2.0 * params_.alpha);
        mass = integrate([&](double s) { return kernel(r, s, delta); }, 0.0, eps, 1e-14 * scale,
                         opt_.rel_tol)
                   .value;
        load = inner_load(r, delta, phi);
    }

    double inner_load(double r, double delta, const ProfileSpec& phi) const {
        if (phi.empty()) return 0.0;
        const double eps = grid_.eps;
        const double gamma = phi.min_tau() + params_.dim - 1.0;
        const double ref = std::abs(phi.value(eps, params_)) * std::pow(delta, -2.0 * params_.alpha);
        auto f = [&](double s, double) { return phi.value(s, params_) * kernel(r, s, delta); };
        return integrate_singular(f, 0.0, eps, std::min(gamma, 0.0), Endpoint::Left,
                                  1e-14 * std::max(ref, 1e-300), opt_.rel_tol)
            .value;
    }

    double exterior_power(double r, double tau) const {
        // s = 1/t: ∫_0^1 t^{−τ−2} K(r, 1/t) dt, behaving like t^{2α−1−τ} at 0.
        const double gamma = 2.0 * params_.alpha - 1.0 - tau;
        auto f = [&](double t, double) {
            return std::pow(t, -tau - 2.0) * kernel(r, 1.0 / t, 0.0);
        };
        const double ref = std::pow(1.0 - r, -2.0 * params_.alpha);
        return integrate_singular(f, 0.0, 1.0, std::min(gamma, 0.0), Endpoint::Left,
                                  1e-14 * ref, opt_.rel_tol)
            .value;
    }

private:
    const RadialGrid& grid_;
    const ModelParams& params_;
    const ProfileSpec& inner_;
    const AssemblyOptions& opt_;
    detail::KernelShape shape_;
    detail::KernelTable table_;
};

template <class Fn>
void parallel_rows(int n, int threads, Fn&& fn) {
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    auto worker = [&]() {
        for (int i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!failure) failure = std::current_exception();
                next = n;
            }
        }
    };
    threads = std::clamp(threads, 1, std::max(n, 1));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
}

}  // namespace

int assembly_threads(const AssemblyOptions& options) {
    if (options.threads > 0) return options.threads;
    if (const char* env = std::getenv("THREADS")) {
        const int t = std::atoi(env);
        if (t > 0) return t;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

NearField near_field_moments(double r, double delta, int dim, double alpha, double rel_tol) {
    if (!(delta > 0.0 && delta < r))
        throw Error(ErrorCode::InvalidArgument, "near-field radius must lie in (0, r)");
    const int wpow = dim - 2;
    // Paired θ, π − θ sums of (s − r) and (s − r)² over [0, π/2].
    auto moments = [&](double rho) -> Pair {
        auto g = [&](double th) -> Pair {
            const double c = std::cos(th);
            const double base = r * r + rho * rho;
            const double sp = std::sqrt(base + 2.0 * r * rho * c);
            const double sm = std::sqrt(base - 2.0 * r * rho * c);
            const double dp = (rho * rho + 2.0 * r * rho * c) / (sp + r);
            const double dm = (rho * rho - 2.0 * r * rho * c) / (sm + r);
            // dp + dm without the O(ρ) cancellation.
            const double first = rho * rho * (1.0 / (sp + r) + 1.0 / (sm + r)) -
                                 8.0 * r * r * rho * rho * c * c / ((sp + r) * (sm + r) * (sp + sm));
            double w = 1.0;
            if (wpow > 0) w = detail::int_pow(std::sin(th), wpow);
            return {first * w, (dp * dp + dm * dm) * w};
        };
        auto q = integrate_vec<2>(g, 0.0, 0.5 * pi, 1e-16 * rho * rho, 1e-12);
        return {q[0].value, q[1].value};
    };
    const double s = -1.0 - 2.0 * alpha;
    auto f = [&](double rho, double) -> Pair {
        const Pair m = moments(rho);
        const double w = std::pow(rho, s);
        return {m[0] * w, m[1] * w};
    };
    const double ref = std::pow(delta, 2.0 - 2.0 * alpha);
    auto q = integrate_singular_vec<2>(f, 0.0, delta, 1.0 - 2.0 * alpha, Endpoint::Left,
                                       1e-15 * ref, rel_tol);
    const double omega = sphere_area(dim - 2);
    return {omega * q[0].value, omega * q[1].value};
}

NonlocalOperator assemble(const RadialGrid& grid, const ModelParams& params,
                          const ProfileSpec& inner, const AssemblyOptions& options) {
    params.validate();
    inner.validate(params.dim);
    const int n = grid.size();
    if (n < kMinNodes) throw Error(ErrorCode::BadGeometry, "grid has too few nodes");

    NonlocalOperator op;
    op.grid_ = grid;
    op.params_ = params;
    op.inner_ = inner;
    op.options_ = options;
    op.a_ = Eigen::MatrixXd::Zero(n, n);
    op.kill_ = Eigen::VectorXd::Zero(n);
    op.load_ = Eigen::VectorXd::Zero(n);
    op.eps_weight_ = Eigen::VectorXd::Zero(n);
    op.cutoff_.assign(n, 0.0);

    const RowAssembler rows(op.grid_, op.params_, op.inner_, op.options_);
    const double phi_eps = inner.empty() ? 0.0 : inner.value(grid.eps, params);
    parallel_rows(n, assembly_threads(options), [&](int i) {
        RowResult res;
        try {
            res = rows.row(i);
        } catch (const Error& e) {
            throw Error(ErrorCode::QuadratureFailure,
                        "row " + std::to_string(i) + " (r=" + std::to_string(grid.nodes[i]) +
                            "): " + e.what());
        }
        auto row = op.a_.row(i);
        for (int j = 0; j < n; ++j) row(j) = -res.p[j];
        if (i > 0) row(i - 1) += res.c_left;
        if (i + 1 < n) row(i + 1) += res.c_right;
        row(i) = 0.0;
        row(i) = -row.sum();
        const double c_left_bd = i == 0 ? res.c_left : 0.0;
        const double c_right_bd = i + 1 == n ? res.c_right : 0.0;
        op.kill_(i) = res.p_eps + res.p_one + res.mass_in + res.mass_ext - c_left_bd - c_right_bd;
        op.eps_weight_(i) = res.p_eps - c_left_bd;
        op.load_(i) = res.inner_load + phi_eps * op.eps_weight_(i);
        op.cutoff_[i] = res.delta;
    });
    return op;
}

Eigen::MatrixXd NonlocalOperator::full() const {
    Eigen::MatrixXd m = a_;
    m.diagonal() += kill_;
    return m;
}

Eigen::VectorXd NonlocalOperator::apply(const Eigen::VectorXd& u) const {
    if (u.size() != size()) throw Error(ErrorCode::InvalidArgument, "vector size mismatch");
    return a_ * u + kill_.cwiseProduct(u) - load_;
}

Eigen::VectorXd NonlocalOperator::apply(const Eigen::VectorXd& u, const ProfileSpec& inner) const {
    if (u.size() != size()) throw Error(ErrorCode::InvalidArgument, "vector size mismatch");
    return a_ * u + kill_.cwiseProduct(u) - load_for(inner);
}

Eigen::VectorXd NonlocalOperator::load_for(const ProfileSpec& inner) const {
    inner.validate(params_.dim);
    const int n = size();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    if (inner.empty()) return out;
    const RowAssembler rows(grid_, params_, inner, options_);
    const double phi_eps = inner.value(grid_.eps, params_);
    parallel_rows(n, assembly_threads(options_), [&](int i) {
        out(i) = rows.inner_load(grid_.nodes[i], cutoff_[i], inner) + phi_eps * eps_weight_(i);
    });
    return out;
}

Eigen::VectorXd NonlocalOperator::exterior_load(double tau) const {
    if (!(tau > -params_.dim && tau < 0.0))
        throw Error(ErrorCode::OutOfRange, "exterior_load needs tau in (-N, 0)");
    const int n = size();
    Eigen::VectorXd out(n);
    const ProfileSpec none;
    const RowAssembler rows(grid_, params_, none, options_);
    parallel_rows(n, assembly_threads(options_),
                  [&](int i) { out(i) = rows.exterior_power(grid_.nodes[i], tau); });
    return out;
}

}  // namespace fracsing
