#pragma once

#include <Eigen/Sparse>

#include "core/femspace.hpp"
#include "core/types.hpp"

namespace negproj {

// Parameters of the duality map J_{s,V} on W₀¹,q with the fixed convention
// s = q, so that ‖J(v)‖ = ‖v‖^{q-1} and the q=2 case is the Riesz map.
struct DualityParams {
  double q = 2.0;
  double eps_reg = 1e-12;  // gradient regularization; 0 for exact identities

  double p() const { return conjugate_exponent(q); }
};

// <J(r), w> = Σ_i ∫ (|∂_i r|² + ε²)^{(q-2)/2} ∂_i r ∂_i w, the anisotropic
// seminorm duality form, integrated with the same fixed-order rule as
// wq_seminorm so <J(r),r> = ‖r‖^q holds to machine precision at ε = 0.
double duality_form(const FemFunction& r, const FemFunction& w,
                    const DualityParams& params);

// <J(r), φ_j> for every test DOF j.
Eigen::VectorXd duality_form_vector(const FemFunction& r, const DualityParams& params);

// Gateaux derivative of the regularized form. The integrand weight per
// component is the true derivative of t ↦ (t²+ε²)^{(q-2)/2} t, namely
// (t²+ε²)^{(q-4)/2} ((q-1)t² + ε²); at ε = 0 this is (q-1)|t|^{q-2} and for
// q = 2 it is identically 1.
double duality_jacobian_form(const FemFunction& r, const FemFunction& delta,
                             const FemFunction& w, const DualityParams& params);

// Assembled Jacobian D(r) with D_{jk} = duality_jacobian_form(r, φ_k, φ_j).
Eigen::SparseMatrix<double> duality_jacobian_matrix(const FemFunction& r,
                                                    const DualityParams& params);

struct DualityIdentity {
  double pairing;     // <J(r), r>
  double norm_power;  // ‖r‖^q (seminorm)
};

// Diagnostic for Def.-style identity checks; call with eps_reg = 0.
DualityIdentity duality_identities_check(const FemFunction& r,
                                         const DualityParams& params);

}  // namespace negproj
