#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "fracsing/barriers.hpp"
#include "fracsing/linear.hpp"
#include "fracsing/solver.hpp"
#include "support.hpp"

using namespace fracsing;

namespace {

struct Fixture {
    ModelParams mp{2, 0.5, 1.8};
    RadialGrid grid = build_grid(1e-2, 80, default_grading(1e-2, 80));
    NonlocalOperator op = assemble(grid, mp, ProfileSpec::power(1.0, -1.0));
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

}  // namespace

TEST_SUITE("solver") {

TEST_CASE("absorption term") {
    CHECK(absorption(2.0, 3.0) == doctest::Approx(8.0));
    CHECK(absorption(-2.0, 3.0) == doctest::Approx(-8.0));
    CHECK(absorption(0.0, 0.5) == 0.0);
    CHECK(absorption(4.0, 0.5) == doctest::Approx(2.0));
}

TEST_CASE("Lipschitz shift") {
    Eigen::VectorXd a(2), b(2);
    a << 2.0, 0.0;
    b << 1.0, 3.0;
    bool floored = true;
    const Eigen::VectorXd c = lipschitz_shift(a, b, 2.0, &floored);
    CHECK(c(0) == doctest::Approx(1.5 * 2 * 2));
    CHECK(c(1) == doctest::Approx(1.5 * 2 * 3));
    CHECK_FALSE(floored);
    const Eigen::VectorXd d = lipschitz_shift(a, b, 0.5, &floored);
    CHECK(floored);
    CHECK(d(1) == doctest::Approx(0.75 * std::pow(1e-12, -0.5)));
    CHECK(d(0) == doctest::Approx(0.75));
}

TEST_CASE("restarting from the limit stops at once") {
    const auto& f = fixture();
    Eigen::VectorXd w(f.op.size());
    for (int i = 0; i < f.op.size(); ++i) w(i) = 1.0 / f.grid.nodes[i];
    const Eigen::VectorXd lo = Eigen::VectorXd::Zero(f.op.size());
    const SolveReport r = monotone_solve(f.op, w, lo, Direction::FromSuper);
    const SolveReport again = monotone_solve(f.op, r.u, lo, Direction::FromSuper);
    CHECK(again.iterations <= 2);
    CHECK(again.final_update <= 1e-9);
    CHECK(discrete_residual(f.op, r.u).cwiseAbs().maxCoeff() <=
          1e-8 * (f.op.full() * r.u).cwiseAbs().maxCoeff());
}

TEST_CASE("monotone iteration between barriers") {
    const auto& f = fixture();
    const BarrierContext ctx(f.op);
    BarrierConstants k;
    k.lambda = 50.0;
    const Eigen::VectorXd sup = ctx.sample(make_barrier(BarrierKind::StrongSuper, f.mp, k));
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(f.op.size());
    SolveOptions opts;
    opts.tol = 1e-11;
    const SolveReport down = monotone_solve(f.op, sup, zero, Direction::FromSuper, opts);
    CHECK(down.monotone_ok);
    CHECK(down.sandwich_ok);
    CHECK(down.final_update <= 1e-11);
    CHECK(down.u.minCoeff() > 0.0);
    CHECK((sup - down.u).minCoeff() >= 0.0);
    for (std::size_t k2 = 1; k2 < down.first_node_history.size(); ++k2)
        CHECK(down.first_node_history[k2] <= down.first_node_history[k2 - 1] * (1 + 1e-12));
    const SolveReport up = monotone_solve(f.op, zero, sup, Direction::FromSub, opts);
    CHECK(up.monotone_ok);
    CHECK(up.sandwich_ok);
    CHECK((down.u - up.u).cwiseAbs().maxCoeff() <= 1e-9 * down.u.maxCoeff());
}

TEST_CASE("iteration budget") {
    const auto& f = fixture();
    Eigen::VectorXd big = Eigen::VectorXd::Constant(f.op.size(), 1e3);
    SolveOptions opts;
    opts.max_iter = 2;
    try {
        monotone_solve(f.op, big, Eigen::VectorXd::Zero(f.op.size()), Direction::FromSuper, opts);
        FAIL("expected MaxIterError");
    } catch (const MaxIterError& e) {
        CHECK(e.last_iterate().size() == static_cast<std::size_t>(f.op.size()));
    }
}

TEST_CASE("strict mode reports a broken ordering") {
    const auto& f = fixture();
    // Starting below the solution while claiming to come from above.
    SolveOptions opts;
    opts.strict = true;
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(f.op.size());
    CHECK(thrown_code([&] { monotone_solve(f.op, zero, zero, Direction::FromSuper, opts); }) ==
          ErrorCode::MonotonicityBroken);
    opts.strict = false;
    const SolveReport r = monotone_solve(f.op, zero, zero, Direction::FromSuper, opts);
    CHECK_FALSE(r.monotone_ok);
}

}
