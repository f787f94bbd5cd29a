#pragma once

// Graded radial mesh on (ε, 1) and the singular inner data prescribed on (0, ε].

#include <string>
#include <vector>

#include "fracsing/model.hpp"

namespace fracsing {

struct RadialGrid {
    double eps = 1e-3;
    double radius = 1.0;
    double grading = 1.0;
    std::vector<double> nodes;  // strictly increasing, inside (eps, radius)

    int size() const { return static_cast<int>(nodes.size()); }
    /// Node k−1, with eps standing in for k = 0 and radius for k = size().
    double left_of(int k) const { return k == 0 ? eps : nodes[k - 1]; }
    double right_of(int k) const { return k + 1 == size() ? radius : nodes[k + 1]; }
    /// Indices of nodes with lo ≤ r ≤ hi.
    std::vector<int> window(double lo, double hi) const;
};

inline constexpr int kMinNodes = 16;

/// n nodes separated by n+1 gaps growing by the factor `grading`, spanning
/// [eps, 1]. grading = 1 gives the uniform spacing (1 − eps)/(n + 1).
RadialGrid build_grid(double eps, int n, double grading);

/// Ratio placing about a third of the n nodes inside (eps, 10 eps).
double default_grading(double eps, int n);

struct PowerTerm {
    double coeff;
    double tau;
};

/// Σ c·r^τ + torsion·κ(1 − r²)^α + bump·(1 − r²)³ on (0, ε]. The torsion and
/// bump parts let barrier components carry their own smooth inner data.
struct ProfileSpec {
    std::vector<PowerTerm> terms;
    double torsion = 0.0;
    double bump = 0.0;

    static ProfileSpec power(double coeff, double tau) { return {{{coeff, tau}}, 0.0, 0.0}; }

    /// Throws OutOfRange unless every τ lies in (−N, 0).
    void validate(int dim) const;
    double value(double r, const ModelParams& params) const;
    /// Most negative exponent, 0 when there are no power terms.
    double min_tau() const;
    bool empty() const { return terms.empty() && torsion == 0.0 && bump == 0.0; }

    ProfileSpec& operator+=(const ProfileSpec& other);
    ProfileSpec scaled(double factor) const;
    std::string describe() const;
};

}  // namespace fracsing
