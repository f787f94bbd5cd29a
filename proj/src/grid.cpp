#include "fracsing/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "fracsing/error.hpp"
#include "fracsing/kernel.hpp"

namespace fracsing {

std::vector<int> RadialGrid::window(double lo, double hi) const {
    std::vector<int> idx;
    for (int k = 0; k < size(); ++k) {
        if (nodes[k] >= lo && nodes[k] <= hi) idx.push_back(k);
    }
    return idx;
}

RadialGrid build_grid(double eps, int n, double grading) {
    if (!(eps > 0.0 && eps < 0.1))
        throw Error(ErrorCode::BadGeometry, "eps must lie in (0, 0.1)");
    if (n < kMinNodes)
        throw Error(ErrorCode::BadGeometry,
                    "need at least " + std::to_string(kMinNodes) + " nodes, got " + std::to_string(n));
    if (!(grading >= 1.0) || !std::isfinite(grading))
        throw Error(ErrorCode::BadGeometry, "grading must be >= 1");

    RadialGrid g;
    g.eps = eps;
    g.grading = grading;
    const int gaps = n + 1;
    const double span = 1.0 - eps;
    // Σ_{k<gaps} g0 q^k = span.
    const double first = grading == 1.0
                             ? span / gaps
                             : span * (grading - 1.0) / std::expm1(gaps * std::log(grading));
    g.nodes.resize(n);
    double x = eps, gap = first;
    for (int k = 0; k < n; ++k) {
        x += gap;
        g.nodes[k] = x;
        gap *= grading;
    }
    if (!(g.nodes.front() > eps && g.nodes.back() < 1.0))
        throw Error(ErrorCode::BadGeometry, "grading too steep for the requested node count");
    return g;
}

double default_grading(double eps, int n) {
    if (n < kMinNodes) throw Error(ErrorCode::BadGeometry, "too few nodes");
    const int target = n / 3;
    // Position of node `target` as a function of q is decreasing; bisect on q.
    auto position = [&](double q) {
        const int gaps = n + 1;
        const double span = 1.0 - eps;
        const double first = span * (q - 1.0) / std::expm1(gaps * std::log(q));
        return eps + first * std::expm1((target + 1) * std::log(q)) / (q - 1.0);
    };
    const double goal = 10.0 * eps;
    double lo = 1.0 + 1e-12, hi = 2.0;
    if (position(lo) <= goal) return 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (position(mid) > goal ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

void ProfileSpec::validate(int dim) const {
    for (const auto& t : terms) {
        if (!(t.tau > -dim && t.tau < 0.0))
            throw Error(ErrorCode::OutOfRange,
                        "profile exponent " + std::to_string(t.tau) + " outside (-N, 0)");
        if (!std::isfinite(t.coeff))
            throw Error(ErrorCode::InvalidArgument, "profile coefficient not finite");
    }
}

double ProfileSpec::value(double r, const ModelParams& params) const {
    double v = 0.0;
    for (const auto& t : terms) v += t.coeff * std::pow(r, t.tau);
    if (r < 1.0) {
        if (torsion != 0.0) v += torsion * exact_torsion(r, params.dim, params.alpha);
        if (bump != 0.0) {
            const double b = (1.0 - r) * (1.0 + r);
            v += bump * b * b * b;
        }
    }
    return v;
}

double ProfileSpec::min_tau() const {
    double m = 0.0;
    for (const auto& t : terms) m = std::min(m, t.tau);
    return m;
}

ProfileSpec& ProfileSpec::operator+=(const ProfileSpec& other) {
    for (const auto& t : other.terms) {
        auto it = std::find_if(terms.begin(), terms.end(),
                               [&](const PowerTerm& x) { return x.tau == t.tau; });
        if (it == terms.end())
            terms.push_back(t);
        else
            it->coeff += t.coeff;
    }
    torsion += other.torsion;
    bump += other.bump;
    return *this;
}

ProfileSpec ProfileSpec::scaled(double factor) const {
    ProfileSpec out = *this;
    for (auto& t : out.terms) t.coeff *= factor;
    out.torsion *= factor;
    out.bump *= factor;
    return out;
}

std::string ProfileSpec::describe() const {
    std::string s;
    char buf[96];
    for (const auto& t : terms) {
        std::snprintf(buf, sizeof buf, "%s%.10g*r^%.10g", s.empty() ? "" : " + ", t.coeff, t.tau);
        s += buf;
    }
    if (torsion != 0.0) {
        std::snprintf(buf, sizeof buf, "%s%.10g*torsion", s.empty() ? "" : " + ", torsion);
        s += buf;
    }
    if (bump != 0.0) {
        std::snprintf(buf, sizeof buf, "%s%.10g*bump", s.empty() ? "" : " + ", bump);
        s += buf;
    }
    return s.empty() ? "0" : s;
}

}  // namespace fracsing
