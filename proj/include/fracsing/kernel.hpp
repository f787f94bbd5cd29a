#pragma once

// Fractional-Laplacian quantities for radial functions. Throughout, the
// operator is the un-normalized principal value
//   (−Δ)^α u(x) = P.V. ∫ (u(x) − u(y)) / |x − y|^{N+2α} dy,
// i.e. without the constant C_{N,α} used by the "normalized" convention.

#include <cstdint>
#include <functional>

#include "fracsing/model.hpp"

namespace fracsing {

struct KernelValue {
    double value = 0.0;
    double error_estimate = 0.0;
};

/// |S^k|, surface measure of the unit k-sphere (|S^0| = 2).
double sphere_area(int k);

/// ∫_0^π sin^{N−2}θ dθ = |S^{N−1}| / |S^{N−2}|.
double angular_mass(int dim);

/// C_{N,α}: multiplies the un-normalized operator to give the normalized one.
double riesz_normalization(int dim, double alpha);

/// 1/Γ(x), continuous through the poles at non-positive integers.
double reciprocal_gamma(double x);

/// C(τ) = ∫_{R^N} (|z − e₁|^τ − 1) / |z|^{N+2α} dz by nested quadrature,
/// angular integral first. τ must lie in (−N, 0).
KernelValue c_tau(double tau, int dim, double alpha, double abs_tol = 1e-10,
                  double rel_tol = 1e-8);

/// Closed-form C(τ) from the Riesz-potential Gamma identity, rescaled to the
/// un-normalized operator. Exactly zero at τ = 2α − N.
double c_tau_oracle(double tau, int dim, double alpha);

/// K(r,s) = |S^{N−2}| s^{N−1} ∫_0^π sin^{N−2}θ (r² + s² − 2rs cosθ)^{−(N+2α)/2} dθ.
/// For radial u(x) = φ(|x|): (−Δ)^α u(r e₁) = P.V. ∫_0^∞ (φ(r) − φ(s)) K(r,s) ds.
KernelValue angular_kernel(double r, double s, int dim, double alpha, double rel_tol = 1e-10);

/// K restricted to points y with |y − r e₁| ≥ cutoff. Bounded for any s > 0.
double truncated_kernel(double r, double s, double cutoff, int dim, double alpha,
                        double rel_tol = 1e-10);

/// (−Δ)^α |x|^τ evaluated at |x| = r, i.e. −C(τ) r^{τ−2α} (closed form).
double flap_power_exact(double tau, double r, const ModelParams& params);

/// Deterministic evaluation of (−Δ)^α of a radial function at r e₁ by
/// nested quadrature in polar coordinates centred at r e₁.
KernelValue flap_radial(const std::function<double(double)>& phi, double r,
                        const ModelParams& params, double abs_tol = 1e-9,
                        double rel_tol = 1e-8);

/// Monte Carlo estimate of (−Δ)^α of a radial function at r e₁ using
/// symmetrized second differences and importance sampling in |y|. The
/// error estimate is one standard error.
KernelValue flap_montecarlo(const std::function<double(double)>& phi, double r,
                            const ModelParams& params, std::int64_t samples, std::uint64_t seed);

/// κ such that κ (1 − r²)^α_+ solves (−Δ)^α V = 1 in the unit ball, V = 0 outside.
double torsion_constant(int dim, double alpha);
double exact_torsion(double r, int dim, double alpha);

}  // namespace fracsing
