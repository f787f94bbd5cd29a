#include "fracsing/linear.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "fracsing/error.hpp"

namespace fracsing {

namespace {

constexpr int kMaxSize = 5000;

double residual_ratio(const Eigen::MatrixXd& m, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& b, Eigen::VectorXd& r) {
    r.noalias() = b - m * x;
    const double bn = b.lpNorm<Eigen::Infinity>();
    const double rn = r.lpNorm<Eigen::Infinity>();
    if (bn == 0.0) return rn;
    return rn / bn;
}

}  // namespace

DenseSolver::DenseSolver(const Eigen::MatrixXd& m) : m_(m) {
    if (m.rows() != m.cols() || m.rows() == 0)
        throw Error(ErrorCode::InvalidArgument, "matrix must be square and non-empty");
    if (m.rows() > kMaxSize)
        throw Error(ErrorCode::InvalidArgument, "dense solve limited to n <= 5000");
    if (!m.allFinite()) throw Error(ErrorCode::SingularMatrix, "matrix has non-finite entries");
    lu_.compute(m_);
    const double rc = lu_.rcond();
    if (!(rc > 1e3 * std::numeric_limits<double>::epsilon())) {
        std::ostringstream os;
        os << "reciprocal condition estimate " << rc;
        throw Error(ErrorCode::SingularMatrix, os.str());
    }
}

Eigen::VectorXd DenseSolver::solve(const Eigen::VectorXd& b) const {
    if (b.size() != m_.rows()) throw Error(ErrorCode::InvalidArgument, "right-hand side size mismatch");
    Eigen::VectorXd x = lu_.solve(b);
    Eigen::VectorXd r;
    double ratio = residual_ratio(m_, x, b, r);
    if (ratio > kResidualTol) {
        x += lu_.solve(r);
        ratio = residual_ratio(m_, x, b, r);
    }
    if (!(ratio <= kResidualTol) || !x.allFinite()) {
        std::ostringstream os;
        os << "relative residual " << ratio << " after refinement";
        throw Error(ErrorCode::SingularMatrix, os.str());
    }
    return x;
}

Eigen::VectorXd linear_solve(const Eigen::MatrixXd& m, const Eigen::VectorXd& b) {
    return DenseSolver(m).solve(b);
}

}  // namespace fracsing
