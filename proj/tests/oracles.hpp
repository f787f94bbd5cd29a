#pragma once

// Reference values computed independently (mpmath Gamma identity and scipy
// two-dimensional quadrature) and frozen here.

namespace oracle {

// C(τ) for the un-normalized operator, N = 2, α = 0.5.
inline constexpr double kC_m0p5 = -1.43554002209226;   // τ = −0.5
inline constexpr double kC_m1p25 = 2.24329395360277;   // τ = −1.25
inline constexpr double kC_m1p5 = 6.87518581802037;    // τ = −1.5 (= −N + α)

// |C(−N + α)| for the other sign-chart pairs.
inline constexpr double kScale_2_0p25 = 12.6899869342984;
inline constexpr double kScale_3_0p5 = 14.8044066016340;
inline constexpr double kScale_3_0p75 = 14.9049510579979;

// C(−1.25)^{1/0.8}: leading coefficient of the strong solution for p = 1.8.
inline constexpr double kStrongA = 2.74541329343555;

// κ with (−Δ)^α κ(1 − r²)^α = 1 in the unit disc, α = 0.5.
inline constexpr double kTorsion_2_0p5 = 0.101321183642;

// (−Δ)^{1/2} (1 − r²)³ in the plane, N = 2.
inline constexpr double kBumpAtZero = 20.106;
inline constexpr double kBumpAt0p5 = 5.451;

}  // namespace oracle
