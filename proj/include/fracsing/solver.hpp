#pragma once

// Monotone iteration for (−Δ)^α u + |u|^{p−1}u = 0 between a sub- and a
// super-solution sampled on the grid.

#include <Eigen/Dense>
#include <string_view>
#include <vector>

#include "fracsing/model.hpp"
#include "fracsing/operator.hpp"

namespace fracsing {

enum class Direction { FromSuper, FromSub };

std::string_view to_string(Direction d);

struct SolveOptions {
    double tol = 1e-10;       // on the relative sup-norm update
    int max_iter = 5000;
    double slack = 1e-12;     // relative slack for the monotonicity and sandwich checks
    bool strict = false;      // throw MonotonicityBroken at the first violation
    // From above with p ≥ 1: lower the shift toward 1.5·p·max(u_k, sub)^{p−1}
    // once it is 4× too large somewhere, refactoring the matrix.
    bool adaptive_shift = true;
    int max_refactorizations = 40;
};

struct SolveReport {
    Eigen::VectorXd u;
    int iterations = 0;
    Direction direction = Direction::FromSuper;
    bool monotone_ok = true;
    bool sandwich_ok = true;
    double final_update = 0.0;          // relative sup norm of the last step
    double residual_norm = 0.0;         // relative sup norm of the discrete residual
    double worst_monotone_violation = 0.0;
    double worst_sandwich_violation = 0.0;
    bool lipschitz_floor_used = false;
    int refactorizations = 0;
    std::vector<double> update_history;
    std::vector<double> first_node_history;  // u at the node nearest ε, per iterate
};

/// |u|^{p−1}u.
double absorption(double u, double p);

/// Per-node shift c_i = 1.5·p·m_i^{p−1}, m_i the largest of |start_i|,
/// |other_i| when p ≥ 1 and the smallest (floored at 1e−12) when p < 1.
/// Sets *floored when the floor was needed.
Eigen::VectorXd lipschitz_shift(const Eigen::VectorXd& start, const Eigen::VectorXd& other,
                                double p, bool* floored = nullptr);

/// u_{k+1} = (A + diag(kill) + diag(c))^{−1}(c∘u_k − |u_k|^{p−1}u_k + load).
SolveReport monotone_solve(const NonlocalOperator& op, const Eigen::VectorXd& start,
                           const Eigen::VectorXd& other_barrier, Direction direction,
                           const Eigen::VectorXd& c_lip, const SolveOptions& options = {});

/// Uses lipschitz_shift(start, other_barrier, p).
SolveReport monotone_solve(const NonlocalOperator& op, const Eigen::VectorXd& start,
                           const Eigen::VectorXd& other_barrier, Direction direction,
                           const SolveOptions& options = {});

/// (A + diag(kill)) u − load + |u|^{p−1}u at every node.
Eigen::VectorXd discrete_residual(const NonlocalOperator& op, const Eigen::VectorXd& u);

}  // namespace fracsing
