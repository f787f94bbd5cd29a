#pragma once

// Explicit comparison functions: the truncated powers V_τ, the torsion
// function V̄, the bump g = (1 − r²)³, and the composite sub- and
// super-solutions built from them, with discrete residual checks.

#include <Eigen/Dense>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "fracsing/model.hpp"
#include "fracsing/operator.hpp"

namespace fracsing {

struct Geometry {
    double ball_radius = 1.0;
    double d0 = 1.0 / 3.0;
    double collar = 1.0 / 6.0;
    // Depth of the dip of the middle interpolant below the plain blend, in
    // [0, 1). Lets checks confirm nothing depends on the interpolant's shape.
    double l_dip = 0.0;

    void validate() const;
    bool operator==(const Geometry&) const = default;
};

/// r^τ below d0, (R − r)² in the collar, a C² blend in between, 0 for r ≥ R.
double v_tau(double tau, double r, const Geometry& geometry = {});

/// (1 − r²)³ inside the unit ball, 0 outside.
double bump_profile(double r);
/// Sup of (−Δ)^α g over a fine radial sample of [0, 1.2].
double bump_constant(const ModelParams& params, int samples = 121);
/// g(r) / C̄.
double bump_v(double r, double cbar);

/// Discrete V̄: (A + diag(kill)) v = 1 + load of the closed-form torsion
/// on (0, ε].
struct TorsionField {
    Eigen::VectorXd values;
    double kappa = 0.0;  // continuous V̄(0)
};

TorsionField v_bar(const NonlocalOperator& op);

enum class TermKind { Power, Torsion, Bump };

struct BarrierTerm {
    double coeff;
    TermKind kind;
    double tau = 0.0;  // power terms only
};

/// Finite combination of V_τ, V̄ and g.
class BarrierFn {
public:
    BarrierFn() = default;
    explicit BarrierFn(const Geometry& geometry) : geometry_(geometry) {}

    static BarrierFn power(double coeff, double tau, const Geometry& geometry = {});
    static BarrierFn torsion(double coeff, const Geometry& geometry = {});
    static BarrierFn bump(double coeff, const Geometry& geometry = {});

    const std::vector<BarrierTerm>& terms() const { return terms_; }
    const Geometry& geometry() const { return geometry_; }

    BarrierFn& operator+=(const BarrierFn& other);
    BarrierFn scaled(double factor) const;
    friend BarrierFn operator+(BarrierFn a, const BarrierFn& b) { return a += b; }
    friend BarrierFn operator-(BarrierFn a, const BarrierFn& b) { return a += b.scaled(-1.0); }
    friend BarrierFn operator*(double c, const BarrierFn& b) { return b.scaled(c); }

    /// Throws OutOfRange unless every power exponent lies in (−N, 0).
    void validate(int dim) const;
    /// Most negative power exponent (0 without power terms) and its coefficient.
    double leading_tau() const;
    double leading_coeff() const;

    /// Pointwise value with the closed-form torsion function.
    double value(double r, const ModelParams& params) const;
    /// The function's own data on (0, ε]; requires ε < d0.
    ProfileSpec inner_profile() const;
    std::string describe() const;

private:
    std::vector<BarrierTerm> terms_;
    Geometry geometry_;
};

/// Discrete sampling and (−Δ)^α of barriers on one assembled operator.
/// Each V_τ, V̄ and g is applied once and cached; combinations are linear.
class BarrierContext {
public:
    explicit BarrierContext(const NonlocalOperator& op);

    const NonlocalOperator& op() const { return op_; }
    const TorsionField& torsion() const { return torsion_; }

    Eigen::VectorXd sample(const BarrierFn& b) const;
    /// Discrete (−Δ)^α b using b's own inner data.
    Eigen::VectorXd flap(const BarrierFn& b) const;

private:
    struct Entry {
        Eigen::VectorXd sample;
        Eigen::VectorXd flap;
    };
    using Key = std::tuple<int, double, double, double, double, double>;
    const Entry& component(const BarrierTerm& term, const Geometry& geometry) const;

    const NonlocalOperator& op_;
    TorsionField torsion_;
    mutable std::mutex mutex_;
    mutable std::map<Key, Entry> cache_;
};

enum class Role { Sub, Super };
std::string_view to_string(Role r);

struct ResidualReport {
    Role role = Role::Super;
    std::vector<double> nodes;
    std::vector<double> residuals;   // (−Δ)^α b + |b|^{p−1}b
    std::vector<double> tolerance;
    int sign_violations = 0;
    // Largest role-signed residual relative to r^{τ−2α}: positive for a
    // sub-solution means residual > 0. Negative when every node has margin.
    double worst_violation = 0.0;
};

/// Residual tolerance per node is tol_factor · rel_tol · r^{τ−2α}, τ the
/// leading exponent and rel_tol the assembly quadrature tolerance.
ResidualReport residual_check(const BarrierFn& b, Role role, const BarrierContext& ctx,
                              double tol_factor = 10.0);

enum class BarrierKind {
    StrongSuper,           // C(τ_p)^{1/(p−1)} V_{τ_p} + λ V̄
    StrongSub,             // C(τ_p)^{1/(p−1)} V_{τ_p} − λ V̄
    WeakSuper,             // t V_{τ0} + μ V̄
    WeakSub,               // t V_{τ0} − μ V_{τ1} − μ² V̄
    WeakSuperCorrected,    // t V_{τ0} − μ V_{τ1} + λ V̄, μ = t^p / (2|C(τ1)|)
    Case1Sub,              // t V_τ − μ V̄
    Case2Super,            // t V_τ + μ V̄
    Case3Super,            // t (V_τ + C V̄)
};

std::string_view to_string(BarrierKind k);
/// Parses the snake_case names used on the command line.
BarrierKind parse_barrier_kind(std::string_view name);
Role role_of(BarrierKind k);
/// Name of the constant tune_constant searches over.
std::string_view free_constant(BarrierKind k);

struct BarrierConstants {
    double lambda = 0.0;
    double mu = -1.0;   // negative: the kind's default where it has one
    double t = 1.0;
    double tau = 0.0;   // Case 1–3 exponent
    double C = 0.0;     // Case 3
};

/// τ1 used by the weak sub-solution: τ0 p + 2α when that lies in (τ0, 0),
/// else τ0 / 2.
double weak_tau1(const ModelParams& params);
/// t^p / |C(τ1)|: coefficient of r^{τ1} in the expansion of the
/// weak-rate solution.
double weak_defect_coefficient(const ModelParams& params, double t);
/// C(τ_p)^{1/(p−1)} with C from quadrature.
double strong_coefficient(const ModelParams& params);

/// Throws RegimeMismatch naming the violated inequality.
void check_regime(BarrierKind kind, const ModelParams& params, const BarrierConstants& constants);

BarrierFn make_barrier(BarrierKind kind, const ModelParams& params,
                       const BarrierConstants& constants, const Geometry& geometry = {});

/// Reads or overwrites the free constant of `kind` in `constants`.
double& free_constant_ref(BarrierKind kind, BarrierConstants& constants);

struct TuneOptions {
    double start = 1e-6;
    int max_doublings = 60;
    int bisections = 40;
    double tol_factor = 10.0;
    int margin_doublings = 2;   // 2·value … 2^k·value must pass as well
};

struct TuneResult {
    double value = 0.0;
    BarrierConstants constants;   // with the free constant set to value
    ResidualReport report;        // at value
    int checks = 0;
};

/// Smallest free constant that has zero residual violations together with
/// its first margin_doublings doublings, by doubling from options.start and
/// then bisecting. Throws TuningFailed when doubling never succeeds.
TuneResult tune_constant(BarrierKind kind, const ModelParams& params, BarrierConstants constants,
                         const BarrierContext& ctx, const TuneOptions& options = {},
                         const Geometry& geometry = {});

}  // namespace fracsing
