#include "fracsing/quadrature.hpp"

namespace fracsing {

namespace {

void check_bounds(double a, double b, double abs_tol, double rel_tol) {
    if (!(a < b)) throw Error(ErrorCode::InvalidArgument, "integration bounds require a < b");
    if (!(abs_tol > 0.0) && !(rel_tol > 0.0))
        throw Error(ErrorCode::InvalidArgument, "at least one tolerance must be positive");
    if (abs_tol < 0.0 || rel_tol < 0.0)
        throw Error(ErrorCode::InvalidArgument, "tolerances must be non-negative");
}

}  // namespace

QuadResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                              double abs_tol, double rel_tol, int max_intervals) {
    check_bounds(a, b, abs_tol, rel_tol);
    return integrate(f, a, b, abs_tol, rel_tol, max_intervals);
}

QuadResult integrate_endpoint_singular(const std::function<double(double)>& f, double a,
                                       double b, double gamma, Endpoint endpoint,
                                       double abs_tol, double rel_tol, int max_intervals) {
    check_bounds(a, b, abs_tol, rel_tol);
    return integrate_singular([&f](double x, double) { return f(x); }, a, b, gamma, endpoint,
                              abs_tol, rel_tol, max_intervals);
}

QuadResult integrate_endpoint_singular_d(const std::function<double(double, double)>& f,
                                         double a, double b, double gamma, Endpoint endpoint,
                                         double abs_tol, double rel_tol, int max_intervals) {
    check_bounds(a, b, abs_tol, rel_tol);
    return integrate_singular(f, a, b, gamma, endpoint, abs_tol, rel_tol, max_intervals);
}

}  // namespace fracsing
