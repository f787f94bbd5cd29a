#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "fracsing/linear.hpp"
#include "support.hpp"

using namespace fracsing;

TEST_SUITE("linear") {

TEST_CASE("identity and scaled identity") {
    Eigen::VectorXd b(3);
    b << 1, 2, 3;
    CHECK(linear_solve(Eigen::MatrixXd::Identity(3, 3), b) == b);
    CHECK((linear_solve(2.0 * Eigen::MatrixXd::Identity(3, 3), b) - 0.5 * b).norm() == 0.0);
}

TEST_CASE("random well-conditioned system") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    Eigen::MatrixXd m(50, 50);
    Eigen::VectorXd b(50);
    for (int i = 0; i < 50; ++i) {
        b(i) = g(rng);
        for (int j = 0; j < 50; ++j) m(i, j) = g(rng);
        m(i, i) += 20.0;
    }
    const DenseSolver solver(m);
    const Eigen::VectorXd x = solver.solve(b);
    CHECK((m * x - b).cwiseAbs().maxCoeff() <= DenseSolver::kResidualTol * b.cwiseAbs().maxCoeff());
}

TEST_CASE("singular and non-finite matrices are rejected") {
    Eigen::MatrixXd m(2, 2);
    m << 1, 2, 2, 4;
    CHECK(thrown_code([&] { DenseSolver s(m); }) == ErrorCode::SingularMatrix);
    m << 1, 0, 0, std::numeric_limits<double>::quiet_NaN();
    CHECK(thrown_code([&] { DenseSolver s(m); }) == ErrorCode::SingularMatrix);
}

}
