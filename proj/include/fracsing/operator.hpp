#pragma once

// Dense discretization of the radial fractional Laplacian on a RadialGrid.
//
// Row i approximates (−Δ)^α u at r_i for u piecewise linear on [ε, 1],
// equal to a ProfileSpec on (0, ε] and to 0 outside the ball. Inside a ball
// of radius δ_i around r_i e₁, u is replaced by its three-point quadratic;
// outside it the exact kernel is integrated against the hat functions.

#include <Eigen/Dense>
#include <vector>

#include "fracsing/grid.hpp"
#include "fracsing/model.hpp"

namespace fracsing {

struct AssemblyOptions {
    double near_cells = 8.0;   // δ_i = near_cells · min(h₋, h₊), clipped to the domain
    double rel_tol = 1e-9;     // kernel and element quadrature
    int threads = 0;           // 0: THREADS env var, else hardware concurrency
};

class NonlocalOperator {
public:
    const RadialGrid& grid() const { return grid_; }
    const ModelParams& params() const { return params_; }
    const ProfileSpec& inner() const { return inner_; }
    const AssemblyOptions& options() const { return options_; }
    int size() const { return grid_.size(); }

    /// Interior coupling with zero row sums.
    const Eigen::MatrixXd& coupling() const { return a_; }
    /// Row-sum defect of the full operator: kernel mass reaching the inner
    /// data and the exterior.
    const Eigen::VectorXd& kill() const { return kill_; }
    /// Contribution of the assembled inner profile.
    const Eigen::VectorXd& load() const { return load_; }
    /// Ball radius used for the quadratic near field at each node.
    const std::vector<double>& cutoffs() const { return cutoff_; }

    /// A + diag(kill).
    Eigen::MatrixXd full() const;
    /// (A + diag(kill)) u − load: the discrete (−Δ)^α u with the assembled inner data.
    Eigen::VectorXd apply(const Eigen::VectorXd& u) const;
    /// Same, with a different inner profile.
    Eigen::VectorXd apply(const Eigen::VectorXd& u, const ProfileSpec& inner) const;

    /// Load vector for any inner profile on the same grid.
    Eigen::VectorXd load_for(const ProfileSpec& inner) const;
    /// ∫_1^∞ s^τ K(r_i, s) ds: what a pure power would add from outside the ball.
    Eigen::VectorXd exterior_load(double tau) const;

private:
    friend NonlocalOperator assemble(const RadialGrid&, const ModelParams&, const ProfileSpec&,
                                     const AssemblyOptions&);

    RadialGrid grid_;
    ModelParams params_;
    ProfileSpec inner_;
    AssemblyOptions options_;
    Eigen::MatrixXd a_;
    Eigen::VectorXd kill_;
    Eigen::VectorXd load_;
    std::vector<double> cutoff_;
    // Weight of φ(ε) from the element [ε, r_0] plus, in row 0, the near-field
    // stencil's left coefficient.
    Eigen::VectorXd eps_weight_;
};

NonlocalOperator assemble(const RadialGrid& grid, const ModelParams& params,
                          const ProfileSpec& inner, const AssemblyOptions& options = {});

/// Threads used for assembly: options.threads, else THREADS, else hardware.
int assembly_threads(const AssemblyOptions& options);

/// Inputs to the three-point quadratic near field at one node.
struct NearField {
    double a1;  // ∫_{B_δ} (s − r) |x − y|^{−N−2α} dy
    double a2;  // ∫_{B_δ} (s − r)² |x − y|^{−N−2α} dy
};

NearField near_field_moments(double r, double delta, int dim, double alpha, double rel_tol);

}  // namespace fracsing
