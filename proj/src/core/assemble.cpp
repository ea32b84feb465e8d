#include "core/assemble.hpp"

#include <vector>

#include "core/quadrature.hpp"

namespace negproj {

namespace {

// Order 6 integrates every product pair exactly (cubic x cubic mass terms
// have total degree 6).
constexpr int kAssemblyOrder = 6;

using Triplet = Eigen::Triplet<double>;

template <typename Kernel>
SparseMat assemble_gram(const TestSpace& V, Kernel&& kernel) {
  const SimplicialMesh& mesh = *V.mesh;
  const auto& rule = quadrature_rule(mesh.dim, kAssemblyOrder);
  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(mesh.num_elements()) * V.local_size() *
                V.local_size());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementMap map = mesh.element_map(e);
    const auto& dofs = V.dof_map[e];
    const int nl = static_cast<int>(dofs.size());
    std::vector<double> local(static_cast<size_t>(nl) * nl, 0.0);
    for (const auto& qp : rule) {
      const BasisEval b = eval_basis(V, e, qp.xref);
      const double w = qp.weight * map.det_abs;
      for (int i = 0; i < nl; ++i)
        for (int j = 0; j < nl; ++j) local[i * nl + j] += w * kernel(b, i, j);
    }
    for (int i = 0; i < nl; ++i) {
      if (dofs[i] < 0) continue;
      for (int j = 0; j < nl; ++j)
        if (dofs[j] >= 0) trips.emplace_back(dofs[i], dofs[j], local[i * nl + j]);
    }
  }
  SparseMat M(V.n_dofs, V.n_dofs);
  M.setFromTriplets(trips.begin(), trips.end());
  M.makeCompressed();
  return M;
}

}  // namespace

SparseMat assemble_stiffness(const TestSpace& V) {
  return assemble_gram(V, [](const BasisEval& b, int i, int j) {
    return b.grad[i][0] * b.grad[j][0] + b.grad[i][1] * b.grad[j][1];
  });
}

SparseMat assemble_mass(const TestSpace& V) {
  return assemble_gram(V, [](const BasisEval& b, int i, int j) {
    return b.value[i] * b.value[j];
  });
}

SparseMat assemble_coupling(const TrialActionSpace& G, const TestSpace& V) {
  if (G.mesh != V.mesh)
    fail(ErrorCode::InvalidArgument, "trial and test spaces must share a mesh");
  const SimplicialMesh& mesh = *V.mesh;
  const auto& rule = quadrature_rule(mesh.dim, kAssemblyOrder);
  std::vector<Triplet> trips;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementMap map = mesh.element_map(e);
    const auto& dofs = V.dof_map[e];
    const int nl = static_cast<int>(dofs.size());
    // Trial generators active on this element and their value at a
    // reference point: 1 for element averages, the hat value for nodal ones.
    for (const auto& qp : rule) {
      const BasisEval b = eval_basis(V, e, qp.xref);
      const double w = qp.weight * map.det_abs;
      if (G.kind == TrialKind::P0Actions) {
        for (int k = 0; k < nl; ++k)
          if (dofs[k] >= 0) trips.emplace_back(dofs[k], e, w * b.value[k]);
      } else {
        const double l[3] = {1.0 - qp.xref[0] - qp.xref[1], qp.xref[0], qp.xref[1]};
        for (int c = 0; c <= mesh.dim; ++c) {
          const int gen = G.generator_of_vertex[mesh.elements[e][c]];
          if (gen < 0) continue;
          const double hat = mesh.dim == 1 ? (c == 0 ? 1.0 - qp.xref[0] : qp.xref[0])
                                           : l[c];
          for (int k = 0; k < nl; ++k)
            if (dofs[k] >= 0) trips.emplace_back(dofs[k], gen, w * hat * b.value[k]);
        }
      }
    }
  }
  SparseMat B(V.n_dofs, G.n_generators);
  B.setFromTriplets(trips.begin(), trips.end());
  B.makeCompressed();
  return B;
}

SparseMat assemble_cross_coupling(const TrialActionSpace& G_coarse,
                                  const TestSpace& V_fine) {
  const SimplicialMesh& coarse = *G_coarse.mesh;
  const SimplicialMesh& fine = *V_fine.mesh;
  if (coarse.dim != fine.dim)
    fail(ErrorCode::InvalidArgument, "cross coupling: dimension mismatch");
  const auto& rule = quadrature_rule(fine.dim, kAssemblyOrder);
  const ElementLocator locator(coarse);
  std::vector<Triplet> trips;
  for (int e = 0; e < fine.num_elements(); ++e) {
    const ElementMap map = fine.element_map(e);
    // Parent by centroid; bisection refinements keep fine elements nested.
    Point centroid{0.0, 0.0};
    for (int k = 0; k <= fine.dim; ++k) {
      centroid[0] += fine.vertices[fine.elements[e][k]][0];
      centroid[1] += fine.vertices[fine.elements[e][k]][1];
    }
    centroid[0] /= fine.dim + 1;
    centroid[1] /= fine.dim + 1;
    const int parent = locator.locate(centroid);
    if (parent < 0)
      fail(ErrorCode::OutOfDomain, "cross coupling: fine element outside coarse mesh");
    const ElementMap pmap = coarse.element_map(parent);
    const auto& dofs = V_fine.dof_map[e];
    const int nl = static_cast<int>(dofs.size());
    for (const auto& qp : rule) {
      const BasisEval b = eval_basis(V_fine, e, qp.xref);
      const double w = qp.weight * map.det_abs;
      if (G_coarse.kind == TrialKind::P0Actions) {
        for (int k = 0; k < nl; ++k)
          if (dofs[k] >= 0) trips.emplace_back(dofs[k], parent, w * b.value[k]);
      } else {
        const Point pref = pmap.to_reference(map.to_physical(qp.xref));
        const double l[3] = {1.0 - pref[0] - (coarse.dim == 2 ? pref[1] : 0.0),
                             pref[0], pref[1]};
        for (int c = 0; c <= coarse.dim; ++c) {
          const int gen = G_coarse.generator_of_vertex[coarse.elements[parent][c]];
          if (gen < 0) continue;
          for (int k = 0; k < nl; ++k)
            if (dofs[k] >= 0) trips.emplace_back(dofs[k], gen, w * l[c] * b.value[k]);
        }
      }
    }
  }
  SparseMat B(V_fine.n_dofs, G_coarse.n_generators);
  B.setFromTriplets(trips.begin(), trips.end());
  B.makeCompressed();
  return B;
}

}  // namespace negproj
