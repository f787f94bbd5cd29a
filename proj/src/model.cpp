#include "fracsing/model.hpp"

#include <cstdio>

#include "fracsing/error.hpp"

namespace fracsing {

std::string_view to_string(Regime r) {
    switch (r) {
        case Regime::Strong: return "strong";
        case Regime::Weak: return "weak";
        case Regime::Supercritical: return "supercritical";
    }
    return "unknown";
}

void ModelParams::validate() const {
    if (dim < 2) throw Error(ErrorCode::InvalidArgument, "dimension N must be >= 2");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
    if (!(p > 0.0)) throw Error(ErrorCode::InvalidArgument, "p must be > 0");
}

std::optional<double> ModelParams::tau_p() const {
    if (p == 1.0) return std::nullopt;
    return -2.0 * alpha / (p - 1.0);
}

Regime ModelParams::regime() const {
    if (p >= p_critical()) return Regime::Supercritical;
    if (p > p_strong_lower()) return Regime::Strong;
    return Regime::Weak;
}

std::string ModelParams::describe() const {
    char buf[160];
    std::snprintf(buf, sizeof buf, "N=%d alpha=%.17g p=%.17g regime=%s", dim, alpha, p,
                  std::string(to_string(regime())).c_str());
    return buf;
}

}  // namespace fracsing
