#include "fracsing/barriers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "fracsing/error.hpp"
#include "fracsing/kernel.hpp"
#include "fracsing/linear.hpp"
#include "fracsing/solver.hpp"

namespace fracsing {

namespace {

// Quintic smoothstep falling from 1 at x = 0 to 0 at x = 1 with vanishing
// first and second derivatives at both ends.
double fall(double x) {
    if (x <= 0.0) return 1.0;
    if (x >= 1.0) return 0.0;
    return 1.0 - x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

// c_tau by quadrature, memoized: tuning rebuilds barriers many times.
double cached_c_tau(double tau, int dim, double alpha) {
    static std::mutex m;
    static std::map<std::tuple<double, int, double>, double> cache;
    const auto key = std::make_tuple(tau, dim, alpha);
    {
        std::lock_guard<std::mutex> lock(m);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    const double v = c_tau(tau, dim, alpha).value;
    std::lock_guard<std::mutex> lock(m);
    cache.emplace(key, v);
    return v;
}

void require_positive_t(const BarrierConstants& c) {
    if (!(c.t > 0.0) || !std::isfinite(c.t))
        throw Error(ErrorCode::InvalidArgument, "level t must be positive, got " + fmt(c.t));
}

}  // namespace

void Geometry::validate() const {
    if (!(ball_radius > 0.0 && d0 > 0.0 && collar > 0.0 && d0 < ball_radius - collar))
        throw Error(ErrorCode::BadGeometry, "need 0 < d0 < ball_radius - collar");
    if (!(l_dip >= 0.0 && l_dip < 1.0))
        throw Error(ErrorCode::BadGeometry, "l_dip must lie in [0, 1)");
}

double v_tau(double tau, double r, const Geometry& g) {
    if (!(tau < 0.0) || !std::isfinite(tau))
        throw Error(ErrorCode::OutOfRange, "V_tau needs tau < 0, got " + fmt(tau));
    if (!(r > 0.0)) throw Error(ErrorCode::NonPositiveRadius, "V_tau at r = " + fmt(r));
    if (r >= g.ball_radius) return 0.0;
    if (r <= g.d0) return std::pow(r, tau);
    const double d = g.ball_radius - r;
    const double inner_edge = g.ball_radius - g.collar;
    if (r >= inner_edge) return d * d;
    const double s = fall((r - g.d0) / (inner_edge - g.d0));
    return s * std::pow(r, tau) * (1.0 - g.l_dip * (1.0 - s)) + (1.0 - s) * d * d;
}

double bump_profile(double r) {
    if (r >= 1.0) return 0.0;
    const double b = (1.0 - r) * (1.0 + r);
    return b * b * b;
}

double bump_constant(const ModelParams& params, int samples) {
    params.validate();
    if (samples < 8) throw Error(ErrorCode::InvalidArgument, "bump_constant needs >= 8 samples");
    const std::function<double(double)> g = bump_profile;
    double best = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < samples; ++k) {
        const double r = k == 0 ? 1e-6 : 1.2 * k / (samples - 1);
        if (std::abs(r - 1.0) < 1e-9) continue;
        best = std::max(best, flap_radial(g, r, params).value);
    }
    return best;
}

double bump_v(double r, double cbar) {
    if (!(cbar > 0.0)) throw Error(ErrorCode::InvalidArgument, "bump constant must be positive");
    return bump_profile(r) / cbar;
}

TorsionField v_bar(const NonlocalOperator& op) {
    ProfileSpec inner;
    inner.torsion = 1.0;
    const Eigen::VectorXd rhs = Eigen::VectorXd::Ones(op.size()) + op.load_for(inner);
    TorsionField f;
    f.values = linear_solve(op.full(), rhs);
    f.kappa = torsion_constant(op.params().dim, op.params().alpha);
    for (Eigen::Index i = 0; i < f.values.size(); ++i) {
        if (!(f.values[i] > 0.0)) {
            std::ostringstream os;
            os << "discrete torsion " << f.values[i] << " at node " << i;
            throw Error(ErrorCode::NonPositiveSolution, os.str());
        }
    }
    return f;
}

BarrierFn BarrierFn::power(double coeff, double tau, const Geometry& geometry) {
    BarrierFn b(geometry);
    b.terms_.push_back({coeff, TermKind::Power, tau});
    return b;
}

BarrierFn BarrierFn::torsion(double coeff, const Geometry& geometry) {
    BarrierFn b(geometry);
    b.terms_.push_back({coeff, TermKind::Torsion, 0.0});
    return b;
}

BarrierFn BarrierFn::bump(double coeff, const Geometry& geometry) {
    BarrierFn b(geometry);
    b.terms_.push_back({coeff, TermKind::Bump, 0.0});
    return b;
}

BarrierFn& BarrierFn::operator+=(const BarrierFn& other) {
    if (!(geometry_ == other.geometry_))
        throw Error(ErrorCode::InvalidArgument, "cannot add barriers with different geometry");
    for (const auto& t : other.terms_) {
        auto it = std::find_if(terms_.begin(), terms_.end(), [&](const BarrierTerm& x) {
            return x.kind == t.kind && x.tau == t.tau;
        });
        if (it == terms_.end())
            terms_.push_back(t);
        else
            it->coeff += t.coeff;
    }
    return *this;
}

BarrierFn BarrierFn::scaled(double factor) const {
    BarrierFn out = *this;
    for (auto& t : out.terms_) t.coeff *= factor;
    return out;
}

void BarrierFn::validate(int dim) const {
    geometry_.validate();
    for (const auto& t : terms_) {
        if (!std::isfinite(t.coeff)) throw Error(ErrorCode::InvalidArgument, "non-finite coefficient");
        if (t.kind == TermKind::Power && !(t.tau > -dim && t.tau < 0.0))
            throw Error(ErrorCode::OutOfRange, "power exponent " + fmt(t.tau) + " outside (-N, 0)");
    }
}

double BarrierFn::leading_tau() const {
    double m = 0.0;
    for (const auto& t : terms_)
        if (t.kind == TermKind::Power && t.coeff != 0.0) m = std::min(m, t.tau);
    return m;
}

double BarrierFn::leading_coeff() const {
    const double lead = leading_tau();
    for (const auto& t : terms_)
        if (t.kind == TermKind::Power && t.tau == lead) return t.coeff;
    return 0.0;
}

double BarrierFn::value(double r, const ModelParams& params) const {
    if (r >= geometry_.ball_radius) return 0.0;
    double v = 0.0;
    for (const auto& t : terms_) {
        switch (t.kind) {
            case TermKind::Power: v += t.coeff * v_tau(t.tau, r, geometry_); break;
            case TermKind::Torsion: v += t.coeff * exact_torsion(r, params.dim, params.alpha); break;
            case TermKind::Bump: v += t.coeff * bump_profile(r); break;
        }
    }
    return v;
}

ProfileSpec BarrierFn::inner_profile() const {
    ProfileSpec p;
    for (const auto& t : terms_) {
        switch (t.kind) {
            case TermKind::Power: p += ProfileSpec::power(t.coeff, t.tau); break;
            case TermKind::Torsion: p.torsion += t.coeff; break;
            case TermKind::Bump: p.bump += t.coeff; break;
        }
    }
    return p;
}

std::string BarrierFn::describe() const {
    std::string s;
    for (const auto& t : terms_) {
        if (!s.empty()) s += " + ";
        s += fmt(t.coeff);
        switch (t.kind) {
            case TermKind::Power: s += "*V[" + fmt(t.tau) + "]"; break;
            case TermKind::Torsion: s += "*Vbar"; break;
            case TermKind::Bump: s += "*g"; break;
        }
    }
    return s.empty() ? "0" : s;
}

BarrierContext::BarrierContext(const NonlocalOperator& op) : op_(op), torsion_(v_bar(op)) {}

const BarrierContext::Entry& BarrierContext::component(const BarrierTerm& term,
                                                       const Geometry& g) const {
    const Key key{static_cast<int>(term.kind), term.tau, g.ball_radius, g.d0, g.collar, g.l_dip};
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
    }
    const auto& nodes = op_.grid().nodes;
    const int n = op_.size();
    Entry e;
    e.sample.resize(n);
    ProfileSpec inner;
    switch (term.kind) {
        case TermKind::Power:
            if (!(op_.grid().eps < g.d0))
                throw Error(ErrorCode::BadGeometry, "puncture radius must lie below d0");
            for (int i = 0; i < n; ++i) e.sample[i] = v_tau(term.tau, nodes[i], g);
            inner = ProfileSpec::power(1.0, term.tau);
            break;
        case TermKind::Torsion:
            e.sample = torsion_.values;
            inner.torsion = 1.0;
            break;
        case TermKind::Bump:
            for (int i = 0; i < n; ++i) e.sample[i] = bump_profile(nodes[i]);
            inner.bump = 1.0;
            break;
    }
    e.flap = op_.apply(e.sample, inner);
    std::lock_guard<std::mutex> lock(mutex_);
    return cache_.emplace(key, std::move(e)).first->second;
}

Eigen::VectorXd BarrierContext::sample(const BarrierFn& b) const {
    b.validate(op_.params().dim);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(op_.size());
    for (const auto& t : b.terms()) out += t.coeff * component(t, b.geometry()).sample;
    return out;
}

Eigen::VectorXd BarrierContext::flap(const BarrierFn& b) const {
    b.validate(op_.params().dim);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(op_.size());
    for (const auto& t : b.terms()) out += t.coeff * component(t, b.geometry()).flap;
    return out;
}

std::string_view to_string(Role r) { return r == Role::Sub ? "sub" : "super"; }

ResidualReport residual_check(const BarrierFn& b, Role role, const BarrierContext& ctx,
                              double tol_factor) {
    const NonlocalOperator& op = ctx.op();
    const double p = op.params().p;
    const double expo = b.leading_tau() - 2.0 * op.params().alpha;
    const double q_tol = op.options().rel_tol;
    const Eigen::VectorXd u = ctx.sample(b);
    const Eigen::VectorXd lu = ctx.flap(b);

    ResidualReport rep;
    rep.role = role;
    rep.nodes = op.grid().nodes;
    const int n = op.size();
    rep.residuals.resize(n);
    rep.tolerance.resize(n);
    rep.worst_violation = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double res = lu[i] + absorption(u[i], p);
        const double scale = std::pow(rep.nodes[i], expo);
        const double tol = tol_factor * q_tol * scale;
        const double signed_res = role == Role::Sub ? res : -res;
        rep.residuals[i] = res;
        rep.tolerance[i] = tol;
        if (signed_res > tol) ++rep.sign_violations;
        rep.worst_violation = std::max(rep.worst_violation, signed_res / scale);
    }
    return rep;
}

std::string_view to_string(BarrierKind k) {
    switch (k) {
        case BarrierKind::StrongSuper: return "strong_super";
        case BarrierKind::StrongSub: return "strong_sub";
        case BarrierKind::WeakSuper: return "weak_super";
        case BarrierKind::WeakSub: return "weak_sub";
        case BarrierKind::WeakSuperCorrected: return "weak_super_corrected";
        case BarrierKind::Case1Sub: return "case1_sub";
        case BarrierKind::Case2Super: return "case2_super";
        case BarrierKind::Case3Super: return "case3_super";
    }
    return "?";
}

BarrierKind parse_barrier_kind(std::string_view name) {
    for (auto k : {BarrierKind::StrongSuper, BarrierKind::StrongSub, BarrierKind::WeakSuper,
                   BarrierKind::WeakSub, BarrierKind::WeakSuperCorrected, BarrierKind::Case1Sub,
                   BarrierKind::Case2Super, BarrierKind::Case3Super})
        if (to_string(k) == name) return k;
    throw Error(ErrorCode::InvalidArgument, "unknown barrier kind '" + std::string(name) + "'");
}

Role role_of(BarrierKind k) {
    switch (k) {
        case BarrierKind::StrongSub:
        case BarrierKind::WeakSub:
        case BarrierKind::Case1Sub: return Role::Sub;
        default: return Role::Super;
    }
}

std::string_view free_constant(BarrierKind k) {
    switch (k) {
        case BarrierKind::StrongSuper:
        case BarrierKind::StrongSub:
        case BarrierKind::WeakSuperCorrected: return "lambda";
        case BarrierKind::Case3Super: return "C";
        default: return "mu";
    }
}

double& free_constant_ref(BarrierKind kind, BarrierConstants& c) {
    const auto name = free_constant(kind);
    if (name == "lambda") return c.lambda;
    if (name == "C") return c.C;
    return c.mu;
}

double weak_tau1(const ModelParams& params) {
    const double t0 = params.tau_weak();
    if (params.correction_admissible()) return t0 * params.p + 2.0 * params.alpha;
    return 0.5 * t0;
}

double weak_defect_coefficient(const ModelParams& params, double t) {
    const double c = cached_c_tau(weak_tau1(params), params.dim, params.alpha);
    return std::pow(t, params.p) / std::abs(c);
}

double strong_coefficient(const ModelParams& params) {
    const auto tp = params.tau_p();
    if (!tp || !(*tp > -params.dim && *tp < 0.0))
        throw Error(ErrorCode::RegimeMismatch, "tau_p outside (-N, 0) for " + params.describe());
    const double c = cached_c_tau(*tp, params.dim, params.alpha);
    if (!(c > 0.0))
        throw Error(ErrorCode::RegimeMismatch, "C(tau_p) = " + fmt(c) + " is not positive");
    return std::pow(c, 1.0 / (params.p - 1.0));
}

void check_regime(BarrierKind kind, const ModelParams& params, const BarrierConstants& c) {
    params.validate();
    const double p = params.p;
    auto fail = [&](const std::string& why) {
        throw Error(ErrorCode::RegimeMismatch,
                    std::string(to_string(kind)) + " needs " + why + " (" + params.describe() + ")");
    };
    const double lower = params.p_strong_lower();
    const double crit = params.p_critical();
    switch (kind) {
        case BarrierKind::StrongSuper:
        case BarrierKind::StrongSub:
            if (!(p > lower)) fail("p > 1 + 2a/N = " + fmt(lower));
            if (!(p < crit)) fail("p < N/(N-2a) = " + fmt(crit));
            return;
        case BarrierKind::WeakSuper:
        case BarrierKind::WeakSub:
            require_positive_t(c);
            if (!(p < crit)) fail("p < N/(N-2a) = " + fmt(crit));
            return;
        case BarrierKind::WeakSuperCorrected:
            require_positive_t(c);
            if (!(p > params.p_corr_lower())) fail("p > 2a/(N-2a) = " + fmt(params.p_corr_lower()));
            if (!(p < crit)) fail("p < N/(N-2a) = " + fmt(crit));
            return;
        case BarrierKind::Case1Sub:
        case BarrierKind::Case2Super: {
            require_positive_t(c);
            const double t0 = params.tau_weak();
            if (!(c.tau > -params.dim && c.tau < t0))
                fail("tau in (-N, 2a-N) = (" + fmt(-params.dim) + ", " + fmt(t0) + ")");
            const double lhs = c.tau * p;
            const double rhs = c.tau - 2.0 * params.alpha;
            if (kind == BarrierKind::Case1Sub && !(lhs > rhs)) fail("tau*p > tau - 2a");
            if (kind == BarrierKind::Case2Super && !(lhs < rhs)) fail("tau*p < tau - 2a");
            return;
        }
        case BarrierKind::Case3Super:
            require_positive_t(c);
            if (!(c.tau > params.tau_weak() && c.tau < 0.0))
                fail("tau in (2a-N, 0) = (" + fmt(params.tau_weak()) + ", 0)");
            return;
    }
}

BarrierFn make_barrier(BarrierKind kind, const ModelParams& params, const BarrierConstants& c,
                       const Geometry& g) {
    check_regime(kind, params, c);
    g.validate();
    const double mu = std::max(c.mu, 0.0);
    const double t0 = params.tau_weak();
    BarrierFn b;
    switch (kind) {
        case BarrierKind::StrongSuper:
        case BarrierKind::StrongSub: {
            const double sign = kind == BarrierKind::StrongSuper ? 1.0 : -1.0;
            b = BarrierFn::power(strong_coefficient(params), *params.tau_p(), g) +
                BarrierFn::torsion(sign * c.lambda, g);
            break;
        }
        case BarrierKind::WeakSuper:
            b = BarrierFn::power(c.t, t0, g) + BarrierFn::torsion(mu, g);
            break;
        case BarrierKind::WeakSub:
            b = BarrierFn::power(c.t, t0, g) - BarrierFn::power(mu, weak_tau1(params), g) -
                BarrierFn::torsion(mu * mu, g);
            break;
        case BarrierKind::WeakSuperCorrected: {
            const double m = c.mu >= 0.0 ? c.mu : 0.5 * weak_defect_coefficient(params, c.t);
            b = BarrierFn::power(c.t, t0, g) - BarrierFn::power(m, weak_tau1(params), g) +
                BarrierFn::torsion(c.lambda, g);
            break;
        }
        case BarrierKind::Case1Sub:
            b = BarrierFn::power(c.t, c.tau, g) - BarrierFn::torsion(mu, g);
            break;
        case BarrierKind::Case2Super:
            b = BarrierFn::power(c.t, c.tau, g) + BarrierFn::torsion(mu, g);
            break;
        case BarrierKind::Case3Super:
            b = c.t * (BarrierFn::power(1.0, c.tau, g) + BarrierFn::torsion(c.C, g));
            break;
    }
    b.validate(params.dim);
    return b;
}

TuneResult tune_constant(BarrierKind kind, const ModelParams& params, BarrierConstants constants,
                         const BarrierContext& ctx, const TuneOptions& opt, const Geometry& g) {
    if (!(opt.start > 0.0) || opt.max_doublings < 0 || opt.bisections < 0 || opt.margin_doublings < 0)
        throw Error(ErrorCode::InvalidArgument, "bad tuning options");
    const Role role = role_of(kind);
    TuneResult out;
    auto check = [&](double value) {
        free_constant_ref(kind, constants) = value;
        ++out.checks;
        return residual_check(make_barrier(kind, params, constants, g), role, ctx, opt.tol_factor);
    };
    // Violations at value plus those at 2·value, ..., 2^margin·value. The
    // residual need not be monotone in the constant (the weak sub-solution's
    // is quadratic in μ), so a lone passing value can sit inside a gap.
    auto probe = [&](double value, ResidualReport& at_value) {
        at_value = check(value);
        int total = at_value.sign_violations;
        double v = value;
        for (int k = 0; k < opt.margin_doublings && total == 0; ++k) {
            v *= 2.0;
            total += check(v).sign_violations;
        }
        return total;
    };

    double hi = opt.start;
    ResidualReport best;
    int bad = probe(hi, best);
    int doublings = 0;
    while (bad > 0) {
        if (doublings == opt.max_doublings) {
            std::ostringstream os;
            os << to_string(kind) << ": " << bad << " violations remain at or above "
               << free_constant(kind) << " = " << hi;
            throw Error(ErrorCode::TuningFailed, os.str());
        }
        hi *= 2.0;
        ++doublings;
        bad = probe(hi, best);
    }
    if (doublings > 0) {
        double lo = 0.5 * hi;
        for (int k = 0; k < opt.bisections && hi - lo > 1e-12 * hi; ++k) {
            const double mid = 0.5 * (lo + hi);
            ResidualReport r;
            if (probe(mid, r) == 0) {
                hi = mid;
                best = std::move(r);
            } else {
                lo = mid;
            }
        }
    }
    free_constant_ref(kind, constants) = hi;
    out.value = hi;
    out.constants = constants;
    out.report = std::move(best);
    return out;
}

}  // namespace fracsing
