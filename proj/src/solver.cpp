#include "fracsing/solver.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "fracsing/error.hpp"
#include "fracsing/linear.hpp"

namespace fracsing {

namespace {

constexpr double kLipschitzFloor = 1e-12;
constexpr double kShrinkTrigger = 4.0;

// Scale for relative comparisons at one node; keeps nodes where u is tiny
// from being judged against zero.
double node_scale(double a, double b, double floor) {
    return std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace

std::string_view to_string(Direction d) {
    return d == Direction::FromSuper ? "from_super" : "from_sub";
}

double absorption(double u, double p) {
    if (u == 0.0) return 0.0;
    return std::copysign(std::pow(std::abs(u), p), u);
}

Eigen::VectorXd lipschitz_shift(const Eigen::VectorXd& start, const Eigen::VectorXd& other,
                                double p, bool* floored) {
    if (start.size() != other.size())
        throw Error(ErrorCode::InvalidArgument, "barrier vectors differ in size");
    Eigen::VectorXd c(start.size());
    bool used_floor = false;
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        const double a = std::abs(start[i]);
        const double b = std::abs(other[i]);
        double m;
        if (p >= 1.0) {
            m = std::max(a, b);
        } else {
            m = std::min(a, b);
            if (m < kLipschitzFloor) {
                m = kLipschitzFloor;
                used_floor = true;
            }
        }
        c[i] = (p == 1.0) ? 1.5 : 1.5 * p * std::pow(m, p - 1.0);
    }
    if (floored) *floored = used_floor;
    return c;
}

Eigen::VectorXd discrete_residual(const NonlocalOperator& op, const Eigen::VectorXd& u) {
    Eigen::VectorXd r = op.apply(u);
    const double p = op.params().p;
    for (Eigen::Index i = 0; i < r.size(); ++i) r[i] += absorption(u[i], p);
    return r;
}

SolveReport monotone_solve(const NonlocalOperator& op, const Eigen::VectorXd& start,
                           const Eigen::VectorXd& other_barrier, Direction direction,
                           const Eigen::VectorXd& c_lip, const SolveOptions& options) {
    const int n = op.size();
    if (start.size() != n || other_barrier.size() != n || c_lip.size() != n)
        throw Error(ErrorCode::InvalidArgument, "vector sizes must match the grid");
    if (!(options.tol > 0.0) || options.max_iter < 1)
        throw Error(ErrorCode::InvalidArgument, "tol must be positive and max_iter >= 1");
    if (!c_lip.allFinite() || (c_lip.array() < 0.0).any())
        throw Error(ErrorCode::InvalidArgument, "c_lip must be finite and nonnegative");

    const double p = op.params().p;
    const bool down = direction == Direction::FromSuper;
    const Eigen::VectorXd& upper = down ? start : other_barrier;
    const Eigen::VectorXd& lower = down ? other_barrier : start;

    const Eigen::MatrixXd base = op.full();
    Eigen::VectorXd c = c_lip;
    auto factor = [&] {
        Eigen::MatrixXd m = base;
        m.diagonal() += c;
        return std::make_unique<DenseSolver>(m);
    };
    std::unique_ptr<DenseSolver> solver = factor();
    // From above with p ≥ 1 the current iterate bounds all later ones, so the
    // shift may follow it down.
    const bool adaptive = options.adaptive_shift && down && p >= 1.0;

    SolveReport rep;
    rep.direction = direction;
    const double floor = 1e-12 * std::max(upper.lpNorm<Eigen::Infinity>(), 1e-300);

    Eigen::VectorXd u = start;
    Eigen::VectorXd rhs(n);
    for (int k = 1; k <= options.max_iter; ++k) {
        for (int i = 0; i < n; ++i) rhs[i] = c[i] * u[i] - absorption(u[i], p);
        rhs += op.load();
        Eigen::VectorXd next = solver->solve(rhs);

        double update = 0.0;
        for (int i = 0; i < n; ++i) {
            const double s = node_scale(u[i], next[i], floor);
            const double step = next[i] - u[i];
            update = std::max(update, std::abs(step) / s);
            const double wrong = (down ? step : -step) / s;
            if (wrong > options.slack) {
                rep.monotone_ok = false;
                rep.worst_monotone_violation = std::max(rep.worst_monotone_violation, wrong);
            }
            const double above = (next[i] - upper[i]) / s;
            const double below = (lower[i] - next[i]) / s;
            const double out = std::max(above, below);
            if (out > options.slack) {
                rep.sandwich_ok = false;
                rep.worst_sandwich_violation = std::max(rep.worst_sandwich_violation, out);
            }
        }
        if (options.strict && !rep.monotone_ok) {
            std::ostringstream os;
            os << to_string(direction) << " iterate " << k << " moved the wrong way by "
               << rep.worst_monotone_violation << " (relative)";
            throw Error(ErrorCode::MonotonicityBroken, os.str());
        }
        u = std::move(next);
        rep.iterations = k;
        rep.final_update = update;
        rep.update_history.push_back(update);
        rep.first_node_history.push_back(u[0]);
        if (update <= options.tol) break;
        if (adaptive && rep.refactorizations < options.max_refactorizations) {
            const Eigen::VectorXd fresh = lipschitz_shift(u, lower, p);
            if ((c.array() > kShrinkTrigger * fresh.array()).any()) {
                c = c.cwiseMin(fresh);
                solver = factor();
                ++rep.refactorizations;
            }
        }
        if (k == options.max_iter) {
            std::ostringstream os;
            os << "no convergence after " << k << " iterations, last update " << update;
            throw MaxIterError(os.str(), std::vector<double>(u.data(), u.data() + n));
        }
    }

    const Eigen::VectorXd au = base * u;
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        const double f = absorption(u[i], p);
        const double lu = au[i] - op.load()[i];
        const double scale = std::abs(au[i]) + std::abs(op.load()[i]) + std::abs(f);
        if (scale > 0.0) worst = std::max(worst, std::abs(lu + f) / scale);
    }
    rep.residual_norm = worst;
    rep.u = std::move(u);
    return rep;
}

SolveReport monotone_solve(const NonlocalOperator& op, const Eigen::VectorXd& start,
                           const Eigen::VectorXd& other_barrier, Direction direction,
                           const SolveOptions& options) {
    bool floored = false;
    const Eigen::VectorXd c = lipschitz_shift(start, other_barrier, op.params().p, &floored);
    SolveReport rep = monotone_solve(op, start, other_barrier, direction, c, options);
    rep.lipschitz_floor_used = floored;
    return rep;
}

}  // namespace fracsing
