#include "core/duality.hpp"

#include <cmath>
#include <vector>

#include "core/quadrature.hpp"

namespace negproj {

namespace {

double form_weight(double g, double q, double eps) {
  const double t = g * g + eps * eps;
  if (t == 0.0) return 0.0;
  return std::pow(t, 0.5 * q - 1.0) * g;
}

double jacobian_weight(double g, double q, double eps) {
  const double t = g * g + eps * eps;
  if (t == 0.0) return q >= 2.0 ? (q == 2.0 ? 1.0 : 0.0) : 0.0;
  return std::pow(t, 0.5 * q - 2.0) * ((q - 1.0) * g * g + eps * eps);
}

template <typename PerQuadPoint>
void quadrature_loop(const FemFunction& r, PerQuadPoint&& body) {
  const SimplicialMesh& mesh = *r.space->mesh;
  const auto& rule = quadrature_rule(mesh.dim, kSeminormQuadOrder);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementMap map = mesh.element_map(e);
    for (const auto& qp : rule) body(e, qp.xref, qp.weight * map.det_abs);
  }
}

}  // namespace

double duality_form(const FemFunction& r, const FemFunction& w,
                    const DualityParams& params) {
  if (r.space != w.space)
    fail(ErrorCode::InvalidArgument, "duality form requires a shared test space");
  const int dim = r.space->mesh->dim;
  double acc = 0.0;
  quadrature_loop(r, [&](int e, const Point& xref, double weight) {
    const Point gr = r.gradient_in(e, xref);
    const Point gw = w.gradient_in(e, xref);
    for (int d = 0; d < dim; ++d)
      acc += weight * form_weight(gr[d], params.q, params.eps_reg) * gw[d];
  });
  return acc;
}

Eigen::VectorXd duality_form_vector(const FemFunction& r, const DualityParams& params) {
  const TestSpace& V = *r.space;
  const int dim = V.mesh->dim;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(V.n_dofs);
  quadrature_loop(r, [&](int e, const Point& xref, double weight) {
    const Point gr = r.gradient_in(e, xref);
    double wd[2];
    for (int d = 0; d < dim; ++d)
      wd[d] = weight * form_weight(gr[d], params.q, params.eps_reg);
    const BasisEval b = eval_basis(V, e, xref);
    const auto& dofs = V.dof_map[e];
    for (int k = 0; k < b.n; ++k) {
      if (dofs[k] < 0) continue;
      double v = wd[0] * b.grad[k][0];
      if (dim == 2) v += wd[1] * b.grad[k][1];
      out[dofs[k]] += v;
    }
  });
  return out;
}

double duality_jacobian_form(const FemFunction& r, const FemFunction& delta,
                             const FemFunction& w, const DualityParams& params) {
  if (r.space != w.space || r.space != delta.space)
    fail(ErrorCode::InvalidArgument, "duality form requires a shared test space");
  const int dim = r.space->mesh->dim;
  double acc = 0.0;
  quadrature_loop(r, [&](int e, const Point& xref, double weight) {
    const Point gr = r.gradient_in(e, xref);
    const Point gd = delta.gradient_in(e, xref);
    const Point gw = w.gradient_in(e, xref);
    for (int d = 0; d < dim; ++d)
      acc += weight * jacobian_weight(gr[d], params.q, params.eps_reg) * gd[d] * gw[d];
  });
  return acc;
}

Eigen::SparseMatrix<double> duality_jacobian_matrix(const FemFunction& r,
                                                    const DualityParams& params) {
  const TestSpace& V = *r.space;
  const int dim = V.mesh->dim;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(V.n_elements()) * V.local_size() * V.local_size());
  quadrature_loop(r, [&](int e, const Point& xref, double weight) {
    const Point gr = r.gradient_in(e, xref);
    double wd[2];
    for (int d = 0; d < dim; ++d)
      wd[d] = weight * jacobian_weight(gr[d], params.q, params.eps_reg);
    const BasisEval b = eval_basis(V, e, xref);
    const auto& dofs = V.dof_map[e];
    for (int j = 0; j < b.n; ++j) {
      if (dofs[j] < 0) continue;
      for (int k = 0; k < b.n; ++k) {
        if (dofs[k] < 0) continue;
        double v = wd[0] * b.grad[j][0] * b.grad[k][0];
        if (dim == 2) v += wd[1] * b.grad[j][1] * b.grad[k][1];
        trips.emplace_back(dofs[j], dofs[k], v);
      }
    }
  });
  Eigen::SparseMatrix<double> D(V.n_dofs, V.n_dofs);
  D.setFromTriplets(trips.begin(), trips.end());
  D.makeCompressed();
  return D;
}

DualityIdentity duality_identities_check(const FemFunction& r,
                                         const DualityParams& params) {
  DualityIdentity id{};
  id.pairing = duality_form(r, r, params);
  id.norm_power = std::pow(wq_seminorm(r, params.q), params.q);
  return id;
}

}  // namespace negproj
