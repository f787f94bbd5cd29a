#pragma once

// Post-processing and experiments: exponent fits, the sign chart of C(τ),
// the barrier-bracketed solve pipeline, uniqueness and nonexistence runs.

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fracsing/barriers.hpp"
#include "fracsing/grid.hpp"
#include "fracsing/model.hpp"
#include "fracsing/operator.hpp"
#include "fracsing/solver.hpp"

namespace fracsing {

struct FitResult {
    double exponent = 0.0;
    double log_constant = 0.0;
    double r_lo = 0.0, r_hi = 0.0;
    double residual_rms = 0.0;
    int n_points = 0;

    double constant() const;
};

inline constexpr int kMinFitPoints = 8;

/// Least-squares line through (log r, log u) for lo ≤ r ≤ hi.
FitResult fit_exponent(const std::vector<double>& r, const std::vector<double>& u, double lo,
                       double hi);
/// Same on grid nodes; the window must lie in [ε, 1/3].
FitResult fit_exponent(const Eigen::VectorXd& u, const RadialGrid& grid, double lo, double hi);

/// Fit of the defect t·r^{2α−N} − u; throws NonPositiveDefect if it is not
/// positive throughout the window.
FitResult correction_fit(const Eigen::VectorXd& u, double t, const ModelParams& params,
                         const RadialGrid& grid, double lo, double hi);
FitResult correction_fit(const std::vector<double>& r, const std::vector<double>& u, double t,
                         const ModelParams& params, double lo, double hi);

struct SignRow {
    double tau;
    double c_quad;
    double c_oracle;
    double rel_diff;   // |c_quad − c_oracle| / |c_oracle|; 0 on rows near 2α − N
    int sign;          // of c_quad, 0 when |c_quad| / scale ≤ zero_tol
    int chart_sign;    // +1 below 2α − N, −1 above, 0 within 0.02 of it
    bool agree;
};

struct SignChart {
    int dim = 2;
    double alpha = 0.5;
    std::vector<SignRow> rows;
    double scale = 0.0;          // |C(−N+α)|
    double zero_value = 0.0;     // C(2α − N) by quadrature
    double zero_normalized = 0.0;
    double zero_tol = 1e-6;
    double max_rel_diff = 0.0;   // over rows away from 2α − N
    bool signs_ok = false;
    bool zero_ok = false;
};

inline constexpr double kChartExclusion = 0.02;

/// τ on an even sweep of [−N + 0.05, −0.05] with `samples` points.
SignChart sign_chart(int dim, double alpha, int samples = 39);
/// Same for an explicit list of τ.
SignChart sign_chart(int dim, double alpha, const std::vector<double>& taus);

enum class ProfileKind { Strong, Weak, Custom };

/// Inner data on (0, ε]: "strong", "weak:T" or "custom:C,TAU".
struct ProfileChoice {
    ProfileKind kind = ProfileKind::Strong;
    double t = 1.0;      // weak level, or custom coefficient
    double tau = 0.0;    // custom exponent

    static ProfileChoice parse(const std::string& text);
    std::string describe() const;
    /// Strong: C(τ_p)^{1/(p−1)} r^{τ_p}. Weak: t r^{τ0}, minus t^p/|C(τ1)| r^{τ1}
    /// when 2α/(N−2α) < p. Custom: C r^τ.
    ProfileSpec realize(const ModelParams& params) const;
};

struct SolveSetup {
    ModelParams params;
    ProfileChoice profile;
    double eps = 1e-3;
    int nodes = 800;
    double grading = 0.0;          // 0: default_grading(eps, nodes)
    SolveOptions solve;
    AssemblyOptions assembly;
    TuneOptions tune;
    double barrier_scale = 1.0;    // multiplies tuned constants before solving
    bool from_super = true;
    bool from_sub = true;
};

struct SolveOutcome {
    RadialGrid grid;
    ProfileSpec inner;
    BarrierKind super_kind = BarrierKind::StrongSuper;
    std::optional<BarrierKind> sub_kind;   // empty: the zero function
    BarrierFn super_fn, sub_fn;
    double super_constant = 0.0, sub_constant = 0.0;
    Eigen::VectorXd super, sub;
    std::optional<SolveReport> down, up;   // from_super, from_sub
    double gap = 0.0;                      // relative sup norm, when both ran
};

/// Assembles, tunes the barrier pair for the profile, and runs the monotone
/// iteration in the requested directions.
SolveOutcome run_solve(const SolveSetup& setup);

/// Relative sup-norm gap max|a − b| / max|a|.
double relative_gap(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

enum class Verdict { Consistent, Inconsistent };
std::string_view to_string(Verdict v);

struct ExperimentReport {
    std::string kind;
    ModelParams params;
    std::string profile;
    std::vector<std::pair<std::string, double>> metrics;
    std::vector<std::string> notes;
    Verdict verdict = Verdict::Inconsistent;

    void add(std::string name, double value) { metrics.emplace_back(std::move(name), value); }
    std::optional<double> metric(const std::string& name) const;
};

/// Limits from above and below with the strong profile; consistent when the
/// relative gap is at most 50 × solve tolerance. `mismatch` scales the inner
/// data of the from_sub run.
ExperimentReport uniqueness_experiment(const SolveSetup& setup, double mismatch = 1.0);

/// Case of the nonexistence argument for an excluded exponent: 1 or 2 for
/// τ in (−N, 2α−N) by the sign of τp − (τ − 2α), 3 for τ in (2α−N, 0).
int nonexistence_case(const ModelParams& params, double tau_bad);

/// Barrier certification at levels t = 2 and t = 1 plus the qualitative
/// exponent drift of a solve with inner data r^{τ_bad}.
ExperimentReport nonexistence_probe(const SolveSetup& setup, double tau_bad, bool drift = true);

}  // namespace fracsing
