#pragma once

#include <functional>
#include <vector>

#include "core/femspace.hpp"

namespace negproj {

using ScalarField = std::function<double(Point)>;

// Quadrature order used for the moment integrals of both operators; the
// compatibility checks use the same rule so defects reduce to roundoff.
constexpr int kFortinQuadOrder = 8;

// Bubble-corrected interpolant onto P1 + bubbles: Πv = Π₁v + Σ α_i b_i with
// α_i = (∫_{T_i} b_i)⁻¹ ∫_{T_i} (v − Π₁v), preserving every element average.
// Π₁ is the Lagrange interpolant at interior vertices. V must be P1Bubble.
FemFunction apply_fortin_p0(const ScalarField& v, const TestSpace& V);

// Bi-orthogonal quadratic patch functions: ψ_i supported on the vertex patch
// P_i with ∫ φ_i ψ_j = η_i δ_ij, η_i = |P_i|. On each patch element ψ_i is
// κ μ(5μ-2) in the center barycentric coordinate μ (κ μ(2μ-1) in 1D), κ = 6.
struct BiorthogonalPsi {
  const TestSpace* V = nullptr;        // quadratic space the ψ live in
  std::vector<int> interior_vertices;  // vertex id per ψ
  std::vector<double> eta;             // patch measures
  // Sparse nodal representation, (global dof, coefficient) per ψ.
  std::vector<std::vector<std::pair<int, double>>> entries;

  FemFunction materialize(int k) const;  // dense copy, for diagnostics
};

BiorthogonalPsi build_biorthogonal_psi(const TestSpace& V);  // V: P2

// Moment-corrected interpolant onto P2: Πv = Π₁v + Σ α_i ψ_i with
// α_i = η_i⁻¹ ∫ φ_i (v − Π₁v), preserving all interior nodal-hat moments.
FemFunction apply_fortin_p1(const ScalarField& v, const BiorthogonalPsi& psi);

// Empirical compatibility report over random smooth test functions: sine
// combinations with analytic gradients on (0,1) or (0,1)², with frequencies
// drawn up to the mesh resolution so the stability ratio stays a meaningful
// operator-norm probe on every refinement level.
struct FortinReport {
  double max_defect = 0.0;  // max_i |<G_i, v - Πv>| / scale over all samples
  double max_ratio = 0.0;   // max ‖Πv‖ / ‖v‖ (W¹q seminorm, q = 2)
  std::vector<double> ratios;
};

FortinReport verify_compatibility(const TrialActionSpace& G, const TestSpace& V,
                                  int samples, unsigned seed = 12345);

}  // namespace negproj
