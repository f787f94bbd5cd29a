#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "fracsing/barriers.hpp"
#include "fracsing/kernel.hpp"
#include "fracsing/solver.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace fracsing;

namespace {

struct Setup {
    ModelParams mp;
    RadialGrid grid;
    NonlocalOperator op;
    BarrierContext ctx;

    Setup(ModelParams m, const ProfileSpec& inner, int n = 300, double eps = 1e-3)
        : mp(m),
          grid(build_grid(eps, n, default_grading(eps, n))),
          op(assemble(grid, mp, inner)),
          ctx(op) {}
};

const Setup& strong() {
    static const Setup s({2, 0.5, 1.8}, ProfileSpec::power(oracle::kStrongA, -1.25));
    return s;
}

const Setup& weak() {
    static const Setup s({2, 0.5, 1.5}, ProfileSpec::power(1.0, -1.0));
    return s;
}

bool passes(const BarrierFn& b, Role role, const BarrierContext& ctx) {
    return residual_check(b, role, ctx).sign_violations == 0;
}

}  // namespace

TEST_SUITE("barriers") {

TEST_CASE("truncated power pieces") {
    CHECK(v_tau(-1.25, 0.2) == doctest::Approx(std::pow(0.2, -1.25)));
    CHECK(v_tau(-1.25, 0.9) == doctest::Approx(0.01));
    CHECK(v_tau(-1.25, 1.0) == 0.0);
    CHECK(v_tau(-1.25, 3.0) == 0.0);
    CHECK(thrown_code([] { v_tau(0.0, 0.5); }) == ErrorCode::OutOfRange);
    CHECK(thrown_code([] { v_tau(-1.0, 0.0); }) == ErrorCode::NonPositiveRadius);
    CHECK(thrown_code([] { Geometry{1.0, 0.9, 0.2, 0.0}.validate(); }) == ErrorCode::BadGeometry);
}

TEST_CASE("middle region stays below the power and above zero") {
    for (double dip : {0.0, 0.5}) {
        Geometry g;
        g.l_dip = dip;
        for (double tau : {-1.9, -1.0, -0.2}) {
            for (int k = 1; k < 100; ++k) {
                const double r = g.d0 + (5.0 / 6.0 - g.d0) * k / 100.0;
                const double v = v_tau(tau, r, g);
                CHECK(v > 0.0);
                CHECK(v <= std::pow(r, tau));
            }
        }
    }
}

TEST_CASE("C2 at the junctions") {
    const Geometry g;
    for (double x : {g.d0, 1.0 - g.collar}) {
        const double h = 1e-4;
        auto f = [&](double r) { return v_tau(-1.25, r, g); };
        const double left1 = (f(x) - f(x - h)) / h, right1 = (f(x + h) - f(x)) / h;
        const double left2 = (f(x) - 2 * f(x - h) + f(x - 2 * h)) / (h * h);
        const double right2 = (f(x + 2 * h) - 2 * f(x + h) + f(x)) / (h * h);
        CHECK(std::abs(left1 - right1) < 1e-2 * (1 + std::abs(left1)));
        CHECK(std::abs(left2 - right2) < 5e-2 * (1 + std::abs(left2)));
    }
}

TEST_CASE("bump") {
    CHECK(bump_profile(0.0) == 1.0);
    CHECK(bump_profile(0.5) == doctest::Approx(0.421875));
    CHECK(bump_profile(1.0) == 0.0);
    CHECK(bump_v(0.5, 2.0) == doctest::Approx(0.2109375));
    CHECK(thrown_code([] { bump_v(0.5, 0.0); }) == ErrorCode::InvalidArgument);
    const double cbar = bump_constant({2, 0.5, 1.8}, 25);
    CHECK(cbar == doctest::Approx(oracle::kBumpAtZero).epsilon(1e-3));
    // The discrete operator applied to g / C̄ stays below one.
    const auto& s = strong();
    const Eigen::VectorXd f = s.ctx.flap(BarrierFn::bump(1.0 / cbar));
    CHECK(f.maxCoeff() <= 1.0 + 1e-3);
}

TEST_CASE("barrier shapes") {
    const ModelParams mp{2, 0.5, 1.8};
    BarrierConstants k;
    k.lambda = 3.0;
    const BarrierFn sup = make_barrier(BarrierKind::StrongSuper, mp, k);
    CHECK(sup.leading_tau() == doctest::Approx(-1.25));
    CHECK(sup.leading_coeff() == doctest::Approx(oracle::kStrongA).epsilon(1e-8));
    CHECK(strong_coefficient(mp) == doctest::Approx(oracle::kStrongA).epsilon(1e-8));
    const BarrierFn sub = make_barrier(BarrierKind::StrongSub, mp, k);
    for (double r : {0.01, 0.3, 0.7, 0.95}) CHECK(sup.value(r, mp) > sub.value(r, mp));
    CHECK(sup.value(1.0, mp) == 0.0);

    const ModelParams wp{2, 0.5, 1.5};
    CHECK(weak_tau1(wp) == doctest::Approx(-0.5));
    CHECK(weak_defect_coefficient(wp, 1.0) == doctest::Approx(0.696602).epsilon(1e-5));
    CHECK(weak_tau1({2, 0.5, 0.8}) == doctest::Approx(-0.5));

    BarrierConstants c;
    c.tau = -1.5;
    CHECK(thrown_code([&] { make_barrier(BarrierKind::Case1Sub, mp, c); }) == ErrorCode::RegimeMismatch);
    CHECK_FALSE(thrown_code([&] { make_barrier(BarrierKind::Case2Super, mp, c); }));
    c.tau = -1.1;
    CHECK_FALSE(thrown_code([&] { make_barrier(BarrierKind::Case1Sub, mp, c); }));
    c.tau = -0.3;
    CHECK_FALSE(thrown_code([&] { make_barrier(BarrierKind::Case3Super, mp, c); }));
    c.t = -1.0;
    CHECK(thrown_code([&] { make_barrier(BarrierKind::Case3Super, mp, c); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("regime mismatches name the inequality") {
    try {
        make_barrier(BarrierKind::StrongSuper, {2, 0.5, 1.2}, {});
        FAIL("expected RegimeMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::RegimeMismatch);
        CHECK(std::string(e.what()).find("p > 1 + 2a/N") != std::string::npos);
    }
    CHECK(thrown_code([] { make_barrier(BarrierKind::WeakSub, {2, 0.5, 2.5}, {}); }) ==
          ErrorCode::RegimeMismatch);
    CHECK(thrown_code([] { make_barrier(BarrierKind::WeakSuperCorrected, {2, 0.5, 0.8}, {}); }) ==
          ErrorCode::RegimeMismatch);
}

TEST_CASE("kind names round-trip") {
    for (BarrierKind k : {BarrierKind::StrongSuper, BarrierKind::StrongSub, BarrierKind::WeakSuper,
                          BarrierKind::WeakSub, BarrierKind::WeakSuperCorrected, BarrierKind::Case1Sub,
                          BarrierKind::Case2Super, BarrierKind::Case3Super})
        CHECK(parse_barrier_kind(to_string(k)) == k);
    CHECK(thrown_code([] { parse_barrier_kind("nope"); }) == ErrorCode::InvalidArgument);
    CHECK(role_of(BarrierKind::Case1Sub) == Role::Sub);
    CHECK(free_constant(BarrierKind::Case3Super) == "C");
    CHECK(free_constant(BarrierKind::WeakSub) == "mu");
}

TEST_CASE("zero is a sub-solution") {
    const ResidualReport r = residual_check(BarrierFn{}, Role::Sub, strong().ctx);
    CHECK(r.sign_violations == 0);
    for (double v : r.residuals) CHECK(v == 0.0);
}

TEST_CASE("discrete torsion") {
    const auto& s = strong();
    const TorsionField& t = s.ctx.torsion();
    CHECK(t.kappa == doctest::Approx(oracle::kTorsion_2_0p5).epsilon(1e-10));
    CHECK(t.values.minCoeff() > 0.0);
    CHECK(t.values(0) == doctest::Approx(t.kappa).epsilon(0.02));
    CHECK(t.values(s.op.size() - 1) < 0.2 * t.kappa);
    for (int i = 1; i < s.op.size(); ++i) CHECK(t.values(i) < t.values(i - 1) * (1 + 1e-9));
    // Self-convergence at r = 0.5 between two resolutions.
    const Setup fine({2, 0.5, 1.8}, ProfileSpec::power(oracle::kStrongA, -1.25), 600);
    auto at = [](const Setup& x, double r) {
        const auto& n = x.grid.nodes;
        int k = 0;
        while (n[k + 1] < r) ++k;
        const double w = (r - n[k]) / (n[k + 1] - n[k]);
        const auto& v = x.ctx.torsion().values;
        return (1 - w) * v(k) + w * v(k + 1);
    };
    CHECK(at(s, 0.5) == doctest::Approx(at(fine, 0.5)).epsilon(0.02));
    CHECK(at(fine, 0.5) == doctest::Approx(exact_torsion(0.5, 2, 0.5)).epsilon(0.02));
}

TEST_CASE("tuned strong pair brackets the solution") {
    const auto& s = strong();
    const TuneResult up = tune_constant(BarrierKind::StrongSuper, s.mp, {}, s.ctx);
    const TuneResult lo = tune_constant(BarrierKind::StrongSub, s.mp, {}, s.ctx);
    CHECK(up.report.sign_violations == 0);
    CHECK(lo.report.sign_violations == 0);
    BarrierConstants twice = up.constants;
    twice.lambda *= 2;
    CHECK(passes(make_barrier(BarrierKind::StrongSuper, s.mp, twice), Role::Super, s.ctx));
    BarrierConstants half = up.constants;
    half.lambda *= 0.5;
    CHECK_FALSE(passes(make_barrier(BarrierKind::StrongSuper, s.mp, half), Role::Super, s.ctx));

    const Eigen::VectorXd sup = s.ctx.sample(make_barrier(BarrierKind::StrongSuper, s.mp, up.constants));
    const Eigen::VectorXd sub = s.ctx.sample(make_barrier(BarrierKind::StrongSub, s.mp, lo.constants));
    CHECK((sup - sub).minCoeff() > 0.0);
    const SolveReport u = monotone_solve(s.op, sup, sub, Direction::FromSuper);
    CHECK(u.sandwich_ok);
    CHECK((u.u - sub).minCoeff() >= -1e-12 * sup.maxCoeff());
    CHECK((sup - u.u).minCoeff() >= -1e-12 * sup.maxCoeff());
    // Two-sided bound near the puncture: u / (A r^{τp}) tends to one.
    const int i = s.grid.window(2e-3, 3e-3).front();
    const double ratio = u.u(i) / (oracle::kStrongA * std::pow(s.grid.nodes[i], -1.25));
    CHECK(ratio == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("weak barriers and the corrected super-solution") {
    const auto& s = weak();
    const TuneResult sup = tune_constant(BarrierKind::WeakSuper, s.mp, {}, s.ctx);
    const TuneResult sub = tune_constant(BarrierKind::WeakSub, s.mp, {}, s.ctx);
    const TuneResult cor = tune_constant(BarrierKind::WeakSuperCorrected, s.mp, {}, s.ctx);
    for (const TuneResult* t : {&sup, &sub, &cor}) {
        CHECK(t->report.sign_violations == 0);
        BarrierConstants k = t->constants;
        BarrierKind kind = t == &sup ? BarrierKind::WeakSuper
                           : t == &sub ? BarrierKind::WeakSub
                                       : BarrierKind::WeakSuperCorrected;
        free_constant_ref(kind, k) *= 2;
        CHECK(passes(make_barrier(kind, s.mp, k), role_of(kind), s.ctx));
    }
}

TEST_CASE("interpolant shape does not change verdicts") {
    const auto& s = strong();
    Geometry dip;
    dip.l_dip = 0.5;
    const TuneResult a = tune_constant(BarrierKind::StrongSuper, s.mp, {}, s.ctx);
    const TuneResult b = tune_constant(BarrierKind::StrongSuper, s.mp, {}, s.ctx, {}, dip);
    CHECK(b.report.sign_violations == 0);
    BarrierConstants k = b.constants;
    k.lambda *= 2;
    CHECK(passes(make_barrier(BarrierKind::StrongSuper, s.mp, k, dip), Role::Super, s.ctx));
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(s.op.size());
    const auto ua = monotone_solve(s.op, s.ctx.sample(make_barrier(BarrierKind::StrongSuper, s.mp, a.constants)),
                                   zero, Direction::FromSuper);
    const auto ub = monotone_solve(
        s.op, s.ctx.sample(make_barrier(BarrierKind::StrongSuper, s.mp, b.constants, dip)), zero,
        Direction::FromSuper);
    CHECK((ua.u - ub.u).cwiseAbs().maxCoeff() <= 1e-8 * ua.u.maxCoeff());
}

}
