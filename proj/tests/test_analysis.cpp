#include <doctest.h>

#include <cmath>
#include <vector>

#include "fracsing/analysis.hpp"
#include "support.hpp"

using namespace fracsing;

namespace {

std::vector<double> geomspace(double lo, double hi, int n) {
    std::vector<double> r(n);
    for (int i = 0; i < n; ++i) r[i] = lo * std::pow(hi / lo, i / (n - 1.0));
    return r;
}

template <class F>
std::vector<double> map(const std::vector<double>& r, F f) {
    std::vector<double> u;
    for (double x : r) u.push_back(f(x));
    return u;
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("pure power fit is exact") {
    const auto r = geomspace(1e-3, 1e-1, 50);
    const FitResult f = fit_exponent(r, map(r, [](double x) { return 3 * std::pow(x, -1.25); }), 1e-3, 1e-1);
    CHECK(f.exponent == doctest::Approx(-1.25).epsilon(1e-12));
    CHECK(f.constant() == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(f.residual_rms < 1e-12);
    CHECK(f.n_points == 50);
}

TEST_CASE("lower-order terms barely move the fit") {
    const auto r = geomspace(1e-3, 1e-2, 40);
    const FitResult f = fit_exponent(r, map(r, [](double x) { return 1 / x + 1; }), 1e-3, 1e-2);
    CHECK(std::abs(f.exponent + 1) < 0.01);
    const FitResult c = fit_exponent(r, map(r, [](double) { return 2.0; }), 1e-3, 1e-2);
    CHECK(std::abs(c.exponent) < 1e-12);
}

TEST_CASE("fit errors") {
    const auto r = geomspace(1e-3, 1e-1, 50);
    auto u = map(r, [](double x) { return 1 / x; });
    CHECK(thrown_code([&] { fit_exponent(r, u, 1e-3, 1.1e-3); }) == ErrorCode::WindowTooSmall);
    u[3] = -1.0;
    CHECK(thrown_code([&] { fit_exponent(r, u, 1e-3, 1e-1); }) == ErrorCode::NonPositiveSample);
    const RadialGrid g = build_grid(1e-3, 100, default_grading(1e-3, 100));
    const Eigen::VectorXd v = Eigen::VectorXd::Ones(100);
    CHECK(thrown_code([&] { fit_exponent(v, g, 1e-3, 0.5); }).has_value());
}

TEST_CASE("correction fit") {
    const ModelParams mp{2, 0.5, 1.5};
    const auto r = geomspace(1e-4, 1e-2, 60);
    const auto u = map(r, [](double x) { return 1 / x - std::pow(x, -0.5); });
    const FitResult f = correction_fit(r, u, 1.0, mp, 1e-4, 1e-2);
    CHECK(f.exponent == doctest::Approx(-0.5).epsilon(1e-10));
    CHECK(f.constant() == doctest::Approx(1.0).epsilon(1e-10));
    const auto over = map(r, [](double x) { return 1 / x + 1; });
    CHECK(thrown_code([&] { correction_fit(r, over, 1.0, mp, 1e-4, 1e-2); }) == ErrorCode::NonPositiveDefect);
    CHECK(thrown_code([&] { correction_fit(r, u, 1.0, {2, 0.5, 2.5}, 1e-4, 1e-2); }) ==
          ErrorCode::RegimeMismatch);
}

TEST_CASE("sign chart") {
    for (auto [n, a] : {std::pair{2, 0.5}, {2, 0.25}, {3, 0.5}, {3, 0.75}}) {
        const SignChart c = sign_chart(n, a, 21);
        CHECK(c.signs_ok);
        CHECK(c.zero_ok);
        CHECK(c.max_rel_diff < 1e-6);
        for (const SignRow& row : c.rows) {
            if (row.chart_sign == 0) continue;
            CHECK(row.sign == row.chart_sign);
        }
    }
    const SignChart z = sign_chart(2, 0.5, std::vector<double>{-1.0});
    CHECK(z.rows.at(0).sign == 0);
    CHECK(z.zero_normalized < 1e-6);
}

TEST_CASE("profile choices") {
    CHECK(ProfileChoice::parse("strong").kind == ProfileKind::Strong);
    const ProfileChoice w = ProfileChoice::parse("weak:2.5");
    CHECK(w.kind == ProfileKind::Weak);
    CHECK(w.t == 2.5);
    const ProfileChoice c = ProfileChoice::parse("custom:1.5,-0.7");
    CHECK(c.kind == ProfileKind::Custom);
    CHECK(c.t == 1.5);
    CHECK(c.tau == -0.7);
    for (const char* bad : {"weird", "weak:", "weak:-1", "custom:1", "custom:1,x"})
        CHECK(thrown_code([&] { ProfileChoice::parse(bad); }) == ErrorCode::InvalidArgument);
    const ProfileSpec weak = w.realize({2, 0.5, 1.5});
    REQUIRE(weak.terms.size() == 2);
    CHECK(weak.terms[1].tau == doctest::Approx(-0.5));
    CHECK(weak.terms[1].coeff < 0.0);
    CHECK(ProfileChoice::parse("weak:1").realize({2, 0.5, 0.8}).terms.size() == 1);
}

TEST_CASE("nonexistence cases") {
    const ModelParams mp{2, 0.5, 1.8};
    CHECK(nonexistence_case(mp, -1.1) == 1);
    CHECK(nonexistence_case(mp, -1.5) == 2);
    CHECK(nonexistence_case(mp, -0.3) == 3);
    CHECK(thrown_code([&] { nonexistence_case(mp, -1.25); }) == ErrorCode::InvalidArgument);
    CHECK(thrown_code([&] { nonexistence_case(mp, -1.0); }) == ErrorCode::InvalidArgument);
    CHECK(thrown_code([&] { nonexistence_case(mp, 0.2); }).has_value());
}

TEST_CASE("strong solve from both sides") {
    SolveSetup s;
    s.params = {2, 0.5, 1.8};
    s.nodes = 300;
    const SolveOutcome o = run_solve(s);
    REQUIRE(o.down);
    REQUIRE(o.up);
    CHECK(o.down->monotone_ok);
    CHECK(o.up->monotone_ok);
    CHECK(o.down->sandwich_ok);
    CHECK(o.up->sandwich_ok);
    CHECK(o.gap <= 50 * s.solve.tol);
    const FitResult f = fit_exponent(o.down->u, o.grid, 2e-3, 2e-2);
    CHECK(f.exponent == doctest::Approx(-1.25).epsilon(0.02));
    CHECK(relative_gap(o.down->u, o.down->u) == 0.0);
}

TEST_CASE("uniqueness experiment detects mismatched data") {
    SolveSetup s;
    s.params = {2, 0.5, 1.8};
    s.nodes = 200;
    const ExperimentReport same = uniqueness_experiment(s);
    CHECK(same.verdict == Verdict::Consistent);
    const ExperimentReport off = uniqueness_experiment(s, 1.1);
    CHECK(off.verdict == Verdict::Inconsistent);
    REQUIRE(off.metric("gap"));
    CHECK(*off.metric("gap") > 1e-3);
}

}
