#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace fracsing {

enum class Regime {
    Strong,         // 1 + 2α/N < p < N/(N−2α): strong and weak singularities both exist
    Weak,           // 0 < p ≤ 1 + 2α/N: only the fundamental-rate singularity exists
    Supercritical,  // p ≥ N/(N−2α): no singular solution
};

std::string_view to_string(Regime r);

/// Dimension, fractional order and absorption exponent of
/// (−Δ)^α u + |u|^{p−1}u = 0, with the critical exponents derived from them.
struct ModelParams {
    int dim = 2;
    double alpha = 0.5;
    double p = 1.8;

    /// Throws InvalidArgument unless dim ≥ 2, 0 < alpha < 1, p > 0.
    void validate() const;

    /// −2α/(p−1); undefined (nullopt) for p = 1.
    std::optional<double> tau_p() const;
    /// 2α − N, the exponent of the fundamental solution.
    double tau_weak() const { return 2.0 * alpha - dim; }
    /// 2α − (N−2α)p, the exponent of the first correction to the weak rate.
    double tau_corr() const { return 2.0 * alpha - (dim - 2.0 * alpha) * p; }

    double p_strong_lower() const { return 1.0 + 2.0 * alpha / dim; }
    double p_critical() const { return dim / (dim - 2.0 * alpha); }
    double p_corr_lower() const { return 2.0 * alpha / (dim - 2.0 * alpha); }

    Regime regime() const;
    bool strong_admissible() const { return regime() == Regime::Strong; }
    bool weak_admissible() const { return p < p_critical(); }
    /// 2α/(N−2α) < p < N/(N−2α): the correction exponent lies in (2α−N, 0).
    bool correction_admissible() const { return p > p_corr_lower() && p < p_critical(); }

    std::string describe() const;
};

}  // namespace fracsing
