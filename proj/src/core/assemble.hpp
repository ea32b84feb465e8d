#pragma once

#include <Eigen/Sparse>

#include "core/femspace.hpp"

namespace negproj {

using SparseMat = Eigen::SparseMatrix<double>;

// Gram matrices on the test space, exact for every supported local basis.
SparseMat assemble_stiffness(const TestSpace& V);  // ∫ ∇φ_i · ∇φ_j
SparseMat assemble_mass(const TestSpace& V);       // ∫ φ_i φ_j

// Coupling B with B(j, i) = <G_i, φ_j>: rows index test DOFs, columns index
// trial generators. Element averages give one column per element; nodal
// actions give moments against interior P1 hats.
SparseMat assemble_coupling(const TrialActionSpace& G, const TestSpace& V);

// Coupling of trial generators living on a coarse mesh against a test space on
// a refinement of it. Fine elements are matched to coarse parents by centroid
// location, so the fine mesh must cover the same domain.
SparseMat assemble_cross_coupling(const TrialActionSpace& G_coarse,
                                  const TestSpace& V_fine);

}  // namespace negproj
