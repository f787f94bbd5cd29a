#pragma once

#include <Eigen/Dense>

namespace fracsing {

/// Partial-pivot LU with a backward residual check. Throws SingularMatrix
/// when the factorization is numerically singular or the check fails after
/// one step of iterative refinement.
class DenseSolver {
public:
    explicit DenseSolver(const Eigen::MatrixXd& m);

    Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
    int size() const { return static_cast<int>(m_.rows()); }

    static constexpr double kResidualTol = 1e-10;

private:
    Eigen::MatrixXd m_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

/// Solves M x = b with ‖Mx − b‖_∞ ≤ 1e−10 ‖b‖_∞.
Eigen::VectorXd linear_solve(const Eigen::MatrixXd& m, const Eigen::VectorXd& b);

}  // namespace fracsing
