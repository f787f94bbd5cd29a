#include "fracsing/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "fracsing/error.hpp"
#include "fracsing/kernel.hpp"

namespace fracsing {

namespace {

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

FitResult fit_points(const std::vector<double>& x, const std::vector<double>& y, double lo,
                     double hi) {
    const int n = static_cast<int>(x.size());
    if (n < kMinFitPoints) {
        throw Error(ErrorCode::WindowTooSmall, "window [" + fmt(lo) + ", " + fmt(hi) + "] holds " +
                                                   std::to_string(n) + " points, need " +
                                                   std::to_string(kMinFitPoints));
    }
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw Error(ErrorCode::WindowTooSmall, "window has no spread in r");
    FitResult f;
    f.exponent = sxy / sxx;
    f.log_constant = my - f.exponent * mx;
    double ss = 0.0;
    for (int i = 0; i < n; ++i) {
        const double e = y[i] - (f.log_constant + f.exponent * x[i]);
        ss += e * e;
    }
    f.residual_rms = std::sqrt(ss / n);
    f.n_points = n;
    f.r_lo = lo;
    f.r_hi = hi;
    return f;
}

void check_window(double lo, double hi) {
    if (!(lo > 0.0 && hi > lo) || !std::isfinite(hi))
        throw Error(ErrorCode::InvalidArgument, "fit window needs 0 < lo < hi");
}

void check_grid_window(const RadialGrid& grid, double lo, double hi) {
    check_window(lo, hi);
    if (lo < grid.eps || hi > grid.radius / 3.0)
        throw Error(ErrorCode::InvalidArgument, "fit window [" + fmt(lo) + ", " + fmt(hi) +
                                                    "] must lie in [eps, 1/3]");
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

// True when a ≥ b on (0, ε], checked on a log-spaced sample.
bool dominates(const ProfileSpec& a, const ProfileSpec& b, double eps, const ModelParams& params) {
    for (int k = 0; k <= 80; ++k) {
        const double r = eps * std::pow(10.0, -8.0 * k / 80.0);
        const double va = a.value(r, params);
        const double vb = b.value(r, params);
        if (va < vb - 1e-12 * std::max(std::abs(va), std::abs(vb))) return false;
    }
    return true;
}

struct BarrierPlan {
    BarrierKind super;
    std::optional<BarrierKind> sub;
    BarrierConstants base;
    double super_multiplier = 1.0;   // applied to the whole super barrier
    double min_sub_mu = 0.0;
};

BarrierPlan plan_barriers(const SolveSetup& s) {
    const ModelParams& mp = s.params;
    BarrierPlan plan{BarrierKind::StrongSuper, BarrierKind::StrongSub, {}};
    switch (s.profile.kind) {
        case ProfileKind::Strong:
            check_regime(BarrierKind::StrongSuper, mp, plan.base);
            return plan;
        case ProfileKind::Weak:
            plan.base.t = s.profile.t;
            plan.super = mp.correction_admissible() ? BarrierKind::WeakSuperCorrected
                                                    : BarrierKind::WeakSuper;
            plan.sub = BarrierKind::WeakSub;
            check_regime(plan.super, mp, plan.base);
            check_regime(BarrierKind::WeakSub, mp, plan.base);
            if (mp.correction_admissible()) plan.min_sub_mu = weak_defect_coefficient(mp, plan.base.t);
            return plan;
        case ProfileKind::Custom:
            break;
    }
    const double c = s.profile.t;
    const double tau = s.profile.tau;
    const double t0 = mp.tau_weak();
    if (!(c > 0.0)) throw Error(ErrorCode::InvalidArgument, "custom profile coefficient must be positive");
    if (!(tau > -mp.dim && tau < 0.0))
        throw Error(ErrorCode::OutOfRange, "custom profile exponent outside (-N, 0)");
    plan.sub.reset();
    plan.base.t = c;
    plan.base.tau = tau;
    const auto tp = mp.tau_p();
    if (std::abs(tau - t0) < 1e-12) {
        plan.super = BarrierKind::WeakSuper;
        plan.sub = BarrierKind::WeakSub;
        check_regime(plan.super, mp, plan.base);
        return plan;
    }
    if (mp.strong_admissible() && std::abs(tau - *tp) < 1e-12) {
        plan.super = BarrierKind::StrongSuper;
        plan.super_multiplier = std::max(1.0, c / strong_coefficient(mp));
        return plan;
    }
    if (tau > t0) {
        plan.super = BarrierKind::Case3Super;
        return plan;
    }
    if (tau * mp.p < tau - 2.0 * mp.alpha) {
        plan.super = BarrierKind::Case2Super;
        return plan;
    }
    // Case 1 data admits no barrier of its own rate; a multiple of the
    // strong super-solution dominates it near the puncture.
    if (!mp.strong_admissible())
        throw Error(ErrorCode::RegimeMismatch,
                    "no super-solution available for r^" + fmt(tau) + " data with " + mp.describe());
    plan.super = BarrierKind::StrongSuper;
    plan.super_multiplier =
        std::max(1.0, c * std::pow(s.eps, tau - *tp) / strong_coefficient(mp));
    return plan;
}

}  // namespace

double FitResult::constant() const { return std::exp(log_constant); }

FitResult fit_exponent(const std::vector<double>& r, const std::vector<double>& u, double lo,
                       double hi) {
    check_window(lo, hi);
    if (r.size() != u.size()) throw Error(ErrorCode::InvalidArgument, "r and u differ in length");
    std::vector<double> x, y;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (r[i] < lo || r[i] > hi) continue;
        if (!(u[i] > 0.0))
            throw Error(ErrorCode::NonPositiveSample, "u = " + fmt(u[i]) + " at r = " + fmt(r[i]));
        x.push_back(std::log(r[i]));
        y.push_back(std::log(u[i]));
    }
    return fit_points(x, y, lo, hi);
}

FitResult fit_exponent(const Eigen::VectorXd& u, const RadialGrid& grid, double lo, double hi) {
    check_grid_window(grid, lo, hi);
    if (u.size() != grid.size()) throw Error(ErrorCode::InvalidArgument, "vector size mismatch");
    return fit_exponent(grid.nodes, to_vector(u), lo, hi);
}

FitResult correction_fit(const std::vector<double>& r, const std::vector<double>& u, double t,
                         const ModelParams& params, double lo, double hi) {
    params.validate();
    if (!params.weak_admissible())
        throw Error(ErrorCode::RegimeMismatch, "weak rate needs p < N/(N-2a) (" + params.describe() + ")");
    check_window(lo, hi);
    if (r.size() != u.size()) throw Error(ErrorCode::InvalidArgument, "r and u differ in length");
    std::vector<double> rr, d;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (r[i] < lo || r[i] > hi) continue;
        const double defect = t * std::pow(r[i], params.tau_weak()) - u[i];
        if (!(defect > 0.0)) {
            throw Error(ErrorCode::NonPositiveDefect,
                        "defect " + fmt(defect) + " at r = " + fmt(r[i]));
        }
        rr.push_back(r[i]);
        d.push_back(defect);
    }
    return fit_exponent(rr, d, lo, hi);
}

FitResult correction_fit(const Eigen::VectorXd& u, double t, const ModelParams& params,
                         const RadialGrid& grid, double lo, double hi) {
    check_grid_window(grid, lo, hi);
    if (u.size() != grid.size()) throw Error(ErrorCode::InvalidArgument, "vector size mismatch");
    return correction_fit(grid.nodes, to_vector(u), t, params, lo, hi);
}

SignChart sign_chart(int dim, double alpha, int samples) {
    if (samples < 20) throw Error(ErrorCode::InvalidArgument, "sign chart needs >= 20 samples");
    std::vector<double> taus(samples);
    const double lo = -dim + 0.05, hi = -0.05;
    for (int k = 0; k < samples; ++k) taus[k] = lo + (hi - lo) * k / (samples - 1);
    return sign_chart(dim, alpha, taus);
}

SignChart sign_chart(int dim, double alpha, const std::vector<double>& taus) {
    ModelParams{dim, alpha, 1.0}.validate();
    SignChart chart;
    chart.dim = dim;
    chart.alpha = alpha;
    const double t0 = 2.0 * alpha - dim;
    chart.scale = std::abs(c_tau(-dim + alpha, dim, alpha).value);
    chart.zero_value = c_tau(t0, dim, alpha).value;
    chart.zero_normalized = std::abs(chart.zero_value) / chart.scale;
    chart.zero_ok = chart.zero_normalized <= chart.zero_tol;
    chart.signs_ok = true;
    for (double tau : taus) {
        if (!(tau > -dim && tau < 0.0))
            throw Error(ErrorCode::OutOfRange, "sign chart exponent outside (-N, 0)");
        SignRow row{};
        row.tau = tau;
        const bool at_zero = std::abs(tau - t0) < 1e-12;
        row.c_quad = at_zero ? chart.zero_value : c_tau(tau, dim, alpha).value;
        row.c_oracle = c_tau_oracle(tau, dim, alpha);
        const bool near = std::abs(tau - t0) < kChartExclusion;
        row.sign = std::abs(row.c_quad) / chart.scale <= chart.zero_tol ? 0 : (row.c_quad > 0 ? 1 : -1);
        row.chart_sign = near ? 0 : (tau < t0 ? 1 : -1);
        if (near) {
            // Only the exact zero is asserted inside the exclusion band.
            row.agree = !at_zero || row.sign == 0;
        } else {
            row.rel_diff = std::abs(row.c_quad - row.c_oracle) / std::abs(row.c_oracle);
            chart.max_rel_diff = std::max(chart.max_rel_diff, row.rel_diff);
            row.agree = row.sign == row.chart_sign;
        }
        chart.signs_ok = chart.signs_ok && row.agree;
        chart.rows.push_back(row);
    }
    return chart;
}

ProfileChoice ProfileChoice::parse(const std::string& text) {
    ProfileChoice p;
    auto number = [&](const std::string& s) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != s.size() || s.empty() || !std::isfinite(v))
            throw Error(ErrorCode::InvalidArgument, "bad number '" + s + "' in profile '" + text + "'");
        return v;
    };
    if (text == "strong") {
        p.kind = ProfileKind::Strong;
    } else if (text.rfind("weak:", 0) == 0) {
        p.kind = ProfileKind::Weak;
        p.t = number(text.substr(5));
        if (!(p.t > 0.0)) throw Error(ErrorCode::InvalidArgument, "weak level must be positive");
    } else if (text.rfind("custom:", 0) == 0) {
        p.kind = ProfileKind::Custom;
        const std::string rest = text.substr(7);
        const auto comma = rest.find(',');
        if (comma == std::string::npos)
            throw Error(ErrorCode::InvalidArgument, "custom profile is custom:C,TAU");
        p.t = number(rest.substr(0, comma));
        p.tau = number(rest.substr(comma + 1));
    } else {
        throw Error(ErrorCode::InvalidArgument,
                    "profile must be strong, weak:T or custom:C,TAU (got '" + text + "')");
    }
    return p;
}

std::string ProfileChoice::describe() const {
    switch (kind) {
        case ProfileKind::Strong: return "strong";
        case ProfileKind::Weak: return "weak:" + fmt(t);
        case ProfileKind::Custom: return "custom:" + fmt(t) + "," + fmt(tau);
    }
    return "?";
}

ProfileSpec ProfileChoice::realize(const ModelParams& params) const {
    switch (kind) {
        case ProfileKind::Strong:
            check_regime(BarrierKind::StrongSuper, params, {});
            return ProfileSpec::power(strong_coefficient(params), *params.tau_p());
        case ProfileKind::Weak: {
            ProfileSpec s = ProfileSpec::power(t, params.tau_weak());
            if (params.correction_admissible())
                s += ProfileSpec::power(-weak_defect_coefficient(params, t), weak_tau1(params));
            return s;
        }
        case ProfileKind::Custom:
            return ProfileSpec::power(t, tau);
    }
    return {};
}

double relative_gap(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double scale = a.lpNorm<Eigen::Infinity>();
    const double diff = (a - b).lpNorm<Eigen::Infinity>();
    return scale > 0.0 ? diff / scale : diff;
}

SolveOutcome run_solve(const SolveSetup& s) {
    s.params.validate();
    const BarrierPlan plan = plan_barriers(s);
    SolveOutcome out;
    const double grading = s.grading > 0.0 ? s.grading : default_grading(s.eps, s.nodes);
    out.grid = build_grid(s.eps, s.nodes, grading);
    out.inner = s.profile.realize(s.params);
    const NonlocalOperator op = assemble(out.grid, s.params, out.inner, s.assembly);
    const BarrierContext ctx(op);

    out.super_kind = plan.super;
    TuneResult sup = tune_constant(plan.super, s.params, plan.base, ctx, s.tune);
    BarrierConstants sc = sup.constants;
    free_constant_ref(plan.super, sc) *= s.barrier_scale;
    out.super_constant = free_constant_ref(plan.super, sc);
    out.super_fn = make_barrier(plan.super, s.params, sc).scaled(plan.super_multiplier);

    out.sub_kind = plan.sub;
    if (plan.sub) {
        TuneResult sub = tune_constant(*plan.sub, s.params, plan.base, ctx, s.tune);
        BarrierConstants bc = sub.constants;
        double& free = free_constant_ref(*plan.sub, bc);
        free = std::max(free * s.barrier_scale, plan.min_sub_mu);
        out.sub_constant = free;
        out.sub_fn = make_barrier(*plan.sub, s.params, bc);
    }

    if (!dominates(out.super_fn.inner_profile(), out.inner, s.eps, s.params) ||
        !dominates(out.inner, out.sub_fn.inner_profile(), s.eps, s.params)) {
        throw Error(ErrorCode::TuningFailed, "barrier inner data does not bracket the profile " +
                                                 out.inner.describe());
    }

    out.super = ctx.sample(out.super_fn);
    out.sub = ctx.sample(out.sub_fn);
    if (s.from_super) out.down = monotone_solve(op, out.super, out.sub, Direction::FromSuper, s.solve);
    if (s.from_sub) out.up = monotone_solve(op, out.sub, out.super, Direction::FromSub, s.solve);
    if (out.down && out.up) out.gap = relative_gap(out.down->u, out.up->u);
    return out;
}

std::string_view to_string(Verdict v) {
    return v == Verdict::Consistent ? "consistent" : "inconsistent";
}

std::optional<double> ExperimentReport::metric(const std::string& name) const {
    for (const auto& [k, v] : metrics)
        if (k == name) return v;
    return std::nullopt;
}

ExperimentReport uniqueness_experiment(const SolveSetup& setup, double mismatch) {
    if (!(mismatch > 0.0)) throw Error(ErrorCode::InvalidArgument, "mismatch factor must be positive");
    check_regime(BarrierKind::StrongSuper, setup.params, {});
    ExperimentReport rep;
    rep.kind = "uniqueness";
    rep.params = setup.params;
    rep.profile = "strong";

    SolveSetup s = setup;
    s.profile = ProfileChoice{};
    const SolveReport* down = nullptr;
    const SolveReport* up = nullptr;
    SolveOutcome a, b;
    double gap;
    if (mismatch == 1.0) {
        s.from_super = s.from_sub = true;
        a = run_solve(s);
        down = &*a.down;
        up = &*a.up;
        gap = a.gap;
    } else {
        s.from_super = true;
        s.from_sub = false;
        a = run_solve(s);
        SolveSetup s2 = setup;
        s2.profile = ProfileChoice{ProfileKind::Custom, mismatch * strong_coefficient(setup.params),
                                   *setup.params.tau_p()};
        s2.from_super = false;
        s2.from_sub = true;
        b = run_solve(s2);
        down = &*a.down;
        up = &*b.up;
        gap = relative_gap(down->u, up->u);
        rep.notes.push_back("from_sub run uses inner data scaled by " + fmt(mismatch));
    }
    const double threshold = 50.0 * setup.solve.tol;
    rep.add("gap", gap);
    rep.add("threshold", threshold);
    rep.add("iterations_from_super", down->iterations);
    rep.add("iterations_from_sub", up->iterations);
    rep.add("monotone_ok", down->monotone_ok && up->monotone_ok);
    rep.add("sandwich_ok", down->sandwich_ok && up->sandwich_ok);
    rep.add("lambda_super", a.super_constant);
    rep.add("lambda_sub", mismatch == 1.0 ? a.sub_constant : b.sub_constant);
    rep.verdict = gap <= threshold ? Verdict::Consistent : Verdict::Inconsistent;
    return rep;
}

int nonexistence_case(const ModelParams& params, double tau_bad) {
    params.validate();
    const double t0 = params.tau_weak();
    if (!(tau_bad > -params.dim && tau_bad < 0.0))
        throw Error(ErrorCode::OutOfRange, "tau_bad outside (-N, 0)");
    if (std::abs(tau_bad - t0) < kChartExclusion)
        throw Error(ErrorCode::InvalidArgument, "tau_bad within 0.02 of 2a-N = " + fmt(t0));
    if (const auto tp = params.tau_p(); tp && std::abs(tau_bad - *tp) < kChartExclusion)
        throw Error(ErrorCode::InvalidArgument, "tau_bad within 0.02 of tau_p = " + fmt(*tp));
    if (tau_bad > t0) return 3;
    return tau_bad * params.p > tau_bad - 2.0 * params.alpha ? 1 : 2;
}

ExperimentReport nonexistence_probe(const SolveSetup& setup, double tau_bad, bool drift) {
    const ModelParams& mp = setup.params;
    const int which = nonexistence_case(mp, tau_bad);
    const BarrierKind kind = which == 1   ? BarrierKind::Case1Sub
                             : which == 2 ? BarrierKind::Case2Super
                                          : BarrierKind::Case3Super;
    ExperimentReport rep;
    rep.kind = "nonexistence";
    rep.params = mp;
    rep.profile = "custom:1," + fmt(tau_bad);
    rep.add("case", which);
    rep.add("tau_bad", tau_bad);

    const double grading = setup.grading > 0.0 ? setup.grading : default_grading(setup.eps, setup.nodes);
    const RadialGrid grid = build_grid(setup.eps, setup.nodes, grading);
    const NonlocalOperator op = assemble(grid, mp, ProfileSpec{}, setup.assembly);
    const BarrierContext ctx(op);

    bool ok = true;
    for (double t : {2.0, 1.0}) {
        BarrierConstants c;
        c.t = t;
        c.tau = tau_bad;
        const TuneResult tuned = tune_constant(kind, mp, c, ctx, setup.tune);
        BarrierConstants twice = tuned.constants;
        free_constant_ref(kind, twice) *= 2.0;
        const ResidualReport r2 =
            residual_check(make_barrier(kind, mp, twice), role_of(kind), ctx, setup.tune.tol_factor);
        const std::string tag = "t" + fmt(t) + "_";
        rep.add(tag + std::string(free_constant(kind)), tuned.value);
        rep.add(tag + "violations", tuned.report.sign_violations);
        rep.add(tag + "violations_doubled", r2.sign_violations);
        ok = ok && tuned.report.sign_violations == 0 && r2.sign_violations == 0;
    }
    rep.notes.push_back(std::string(to_string(kind)) + " barriers certified at t = 2 and t = 1");

    if (drift) {
        SolveSetup s = setup;
        s.profile = ProfileChoice{ProfileKind::Custom, 1.0, tau_bad};
        s.from_sub = false;
        s.from_super = true;
        try {
            const SolveOutcome o = run_solve(s);
            const double e = setup.eps;
            const FitResult near = fit_exponent(o.down->u, o.grid, 2.0 * e, 10.0 * e);
            const FitResult far = fit_exponent(o.down->u, o.grid, 20.0 * e, 100.0 * e);
            rep.add("exponent_near", near.exponent);
            rep.add("exponent_far", far.exponent);
            rep.add("drift", far.exponent - tau_bad);
            std::string admissible = "admissible rates:";
            if (mp.weak_admissible()) admissible += " " + fmt(mp.tau_weak());
            if (mp.strong_admissible()) admissible += " " + fmt(*mp.tau_p());
            if (!mp.weak_admissible()) admissible += " none (supercritical)";
            rep.notes.push_back(admissible);
        } catch (const Error& err) {
            rep.notes.push_back(std::string("drift solve skipped: ") + err.what());
        }
    }
    rep.verdict = ok ? Verdict::Consistent : Verdict::Inconsistent;
    return rep;
}

}  // namespace fracsing
