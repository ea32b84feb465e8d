#include "core/femspace.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "core/quadrature.hpp"

namespace negproj {

namespace {

constexpr std::array<std::pair<int, int>, 3> kLocalEdges{{{0, 1}, {1, 2}, {0, 2}}};

std::pair<int, int> sorted_edge(int a, int b) { return {std::min(a, b), std::max(a, b)}; }

// Edge -> number of adjacent elements; 1 marks a boundary edge.
std::map<std::pair<int, int>, int> edge_counts(const SimplicialMesh& mesh) {
  std::map<std::pair<int, int>, int> count;
  for (const auto& el : mesh.elements)
    for (const auto& [i, j] : kLocalEdges) ++count[sorted_edge(el[i], el[j])];
  return count;
}

int resolve_degree(const SimplicialMesh& mesh, TestSpaceKind kind) {
  switch (kind) {
    case TestSpaceKind::P1:
    case TestSpaceKind::P1Bubble:
      return 1;
    case TestSpaceKind::P2:
      return 2;
    case TestSpaceKind::PdPlus1:
      return mesh.dim + 1;
  }
  fail(ErrorCode::InvalidArgument, "unknown test space kind");
}

}  // namespace

int TestSpace::local_size() const {
  const int dim = mesh->dim;
  if (degree == 1) return dim + 1 + (has_bubble ? 1 : 0);
  if (dim == 1) return 3;  // quadratic on the interval
  return degree == 2 ? 6 : 10;
}

TestSpace TestSpace::make(const SimplicialMesh& mesh, TestSpaceKind kind) {
  TestSpace s;
  s.kind = kind;
  s.mesh = &mesh;
  s.degree = resolve_degree(mesh, kind);
  s.has_bubble = kind == TestSpaceKind::P1Bubble;
  if (mesh.dim == 1 && s.degree > 2)
    fail(ErrorCode::InvalidArgument, "1D test spaces support degree <= 2");

  const int nv = mesh.num_vertices();
  const int ne = mesh.num_elements();
  s.vertex_dof.assign(nv, -1);
  int next = 0;
  for (int v = 0; v < nv; ++v)
    if (!mesh.is_boundary_vertex(v)) s.vertex_dof[v] = next++;

  // Edge DOF blocks, (degree-1) per interior edge, numbered by first
  // encounter in element order so the layout is deterministic.
  std::map<std::pair<int, int>, int> edge_base;
  if (mesh.dim == 2 && s.degree >= 2) {
    const auto counts = edge_counts(mesh);
    const int per_edge = s.degree - 1;
    for (const auto& el : mesh.elements) {
      for (const auto& [i, j] : kLocalEdges) {
        const auto key = sorted_edge(el[i], el[j]);
        if (edge_base.count(key)) continue;
        if (counts.at(key) == 1) {
          edge_base[key] = -1;  // boundary edge
        } else {
          edge_base[key] = next;
          next += per_edge;
        }
      }
    }
  }
  // 1D quadratic: one interior midpoint DOF per element.
  std::vector<int> midpoint_dof;
  if (mesh.dim == 1 && s.degree == 2) {
    midpoint_dof.resize(ne);
    for (int e = 0; e < ne; ++e) midpoint_dof[e] = next++;
  }
  // Element-interior DOFs: bubbles or the cubic center node.
  std::vector<int> interior_dof;
  if (s.has_bubble || (mesh.dim == 2 && s.degree == 3)) {
    interior_dof.resize(ne);
    for (int e = 0; e < ne; ++e) interior_dof[e] = next++;
  }
  s.n_dofs = next;

  s.dof_map.assign(ne, {});
  for (int e = 0; e < ne; ++e) {
    const auto& el = mesh.elements[e];
    auto& dofs = s.dof_map[e];
    dofs.reserve(s.local_size());
    for (int i = 0; i <= mesh.dim; ++i) dofs.push_back(s.vertex_dof[el[i]]);
    if (mesh.dim == 1 && s.degree == 2) dofs.push_back(midpoint_dof[e]);
    if (mesh.dim == 2 && s.degree >= 2) {
      for (const auto& [i, j] : kLocalEdges) {
        const int base = edge_base.at(sorted_edge(el[i], el[j]));
        if (s.degree == 2) {
          dofs.push_back(base);
        } else if (base < 0) {
          dofs.push_back(-1);
          dofs.push_back(-1);
        } else {
          // Block stores (near smaller global vertex, near larger).
          const bool i_first = el[i] < el[j];
          dofs.push_back(i_first ? base : base + 1);
          dofs.push_back(i_first ? base + 1 : base);
        }
      }
    }
    if (s.has_bubble || (mesh.dim == 2 && s.degree == 3))
      dofs.push_back(interior_dof[e]);
  }
  return s;
}

namespace {

// Reference-space values and gradients; grad convention matches Point.
void eval_reference(const TestSpace& s, const Point& xref, BasisEval& out) {
  const int dim = s.mesh->dim;
  const double x = xref[0], y = xref[1];
  auto push = [&out](double v, double gx, double gy) {
    out.value[out.n] = v;
    out.grad[out.n] = {gx, gy};
    ++out.n;
  };
  if (dim == 1) {
    if (s.degree == 1) {
      push(1.0 - x, -1.0, 0.0);
      push(x, 1.0, 0.0);
      if (s.has_bubble) push(x * (1.0 - x), 1.0 - 2.0 * x, 0.0);
    } else {
      push((1.0 - x) * (1.0 - 2.0 * x), 4.0 * x - 3.0, 0.0);
      push(x * (2.0 * x - 1.0), 4.0 * x - 1.0, 0.0);
      push(4.0 * x * (1.0 - x), 4.0 - 8.0 * x, 0.0);
    }
    return;
  }
  const double l[3] = {1.0 - x - y, x, y};
  const double gl[3][2] = {{-1.0, -1.0}, {1.0, 0.0}, {0.0, 1.0}};
  auto push_bary = [&](double v, double d0, double d1, double d2) {
    const double d[3] = {d0, d1, d2};
    double gx = 0.0, gy = 0.0;
    for (int k = 0; k < 3; ++k) {
      gx += d[k] * gl[k][0];
      gy += d[k] * gl[k][1];
    }
    push(v, gx, gy);
  };
  if (s.degree == 1) {
    for (int k = 0; k < 3; ++k) push(l[k], gl[k][0], gl[k][1]);
    if (s.has_bubble)
      push_bary(l[0] * l[1] * l[2], l[1] * l[2], l[0] * l[2], l[0] * l[1]);
    return;
  }
  if (s.degree == 2) {
    for (int k = 0; k < 3; ++k) {
      double d[3] = {0, 0, 0};
      d[k] = 4.0 * l[k] - 1.0;
      push_bary(l[k] * (2.0 * l[k] - 1.0), d[0], d[1], d[2]);
    }
    for (const auto& [i, j] : kLocalEdges) {
      double d[3] = {0, 0, 0};
      d[i] = 4.0 * l[j];
      d[j] = 4.0 * l[i];
      push_bary(4.0 * l[i] * l[j], d[0], d[1], d[2]);
    }
    return;
  }
  // Cubic Lagrange basis.
  for (int k = 0; k < 3; ++k) {
    double d[3] = {0, 0, 0};
    d[k] = 0.5 * (27.0 * l[k] * l[k] - 18.0 * l[k] + 2.0);
    push_bary(0.5 * l[k] * (3.0 * l[k] - 1.0) * (3.0 * l[k] - 2.0), d[0], d[1], d[2]);
  }
  for (const auto& [i, j] : kLocalEdges) {
    {  // node at 2/3 toward vertex i
      double d[3] = {0, 0, 0};
      d[i] = 4.5 * l[j] * (6.0 * l[i] - 1.0);
      d[j] = 4.5 * l[i] * (3.0 * l[i] - 1.0);
      push_bary(4.5 * l[i] * l[j] * (3.0 * l[i] - 1.0), d[0], d[1], d[2]);
    }
    {
      double d[3] = {0, 0, 0};
      d[j] = 4.5 * l[i] * (6.0 * l[j] - 1.0);
      d[i] = 4.5 * l[j] * (3.0 * l[j] - 1.0);
      push_bary(4.5 * l[i] * l[j] * (3.0 * l[j] - 1.0), d[0], d[1], d[2]);
    }
  }
  push_bary(27.0 * l[0] * l[1] * l[2], 27.0 * l[1] * l[2], 27.0 * l[0] * l[2],
            27.0 * l[0] * l[1]);
}

}  // namespace

BasisEval eval_basis(const TestSpace& space, int element, const Point& xref) {
  BasisEval out;
  eval_reference(space, xref, out);
  const ElementMap map = space.mesh->element_map(element);
  for (int k = 0; k < out.n; ++k) out.grad[k] = map.push_gradient(out.grad[k]);
  return out;
}

FemFunction::FemFunction(const TestSpace& s, Eigen::VectorXd c)
    : space(&s), coeffs(std::move(c)) {
  if (coeffs.size() != s.n_dofs)
    fail(ErrorCode::InvalidArgument, "coefficient length does not match n_dofs");
}

double FemFunction::value_in(int element, const Point& xref) const {
  const BasisEval b = eval_basis(*space, element, xref);
  const auto& dofs = space->dof_map[element];
  double v = 0.0;
  for (int k = 0; k < b.n; ++k)
    if (dofs[k] >= 0) v += coeffs[dofs[k]] * b.value[k];
  return v;
}

Point FemFunction::gradient_in(int element, const Point& xref) const {
  const BasisEval b = eval_basis(*space, element, xref);
  const auto& dofs = space->dof_map[element];
  Point g{0.0, 0.0};
  for (int k = 0; k < b.n; ++k)
    if (dofs[k] >= 0) {
      g[0] += coeffs[dofs[k]] * b.grad[k][0];
      g[1] += coeffs[dofs[k]] * b.grad[k][1];
    }
  return g;
}

double FemFunction::value_at(const Point& x) const {
  const int e = space->mesh->locate(x);
  if (e < 0) {
    std::ostringstream os;
    os << "point (" << x[0] << ", " << x[1] << ") is outside the domain";
    fail(ErrorCode::OutOfDomain, os.str());
  }
  return value_in(e, space->mesh->element_map(e).to_reference(x));
}

std::vector<double> wq_seminorm_local(const FemFunction& u, double q) {
  if (!(q > 1.0)) fail(ErrorCode::InvalidArgument, "wq_seminorm requires q > 1");
  const SimplicialMesh& mesh = *u.space->mesh;
  const auto& rule = quadrature_rule(mesh.dim, kSeminormQuadOrder);
  std::vector<double> local(mesh.num_elements(), 0.0);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementMap map = mesh.element_map(e);
    double acc = 0.0;
    for (const auto& qp : rule) {
      const Point g = u.gradient_in(e, qp.xref);
      double s = std::pow(std::abs(g[0]), q);
      if (mesh.dim == 2) s += std::pow(std::abs(g[1]), q);
      acc += qp.weight * s;
    }
    local[e] = std::pow(map.det_abs * acc, 1.0 / q);
  }
  return local;
}

double wq_seminorm(const FemFunction& u, double q) {
  double acc = 0.0;
  for (double le : wq_seminorm_local(u, q)) acc += std::pow(le, q);
  return std::pow(acc, 1.0 / q);
}

TrialActionSpace TrialActionSpace::make(const SimplicialMesh& mesh, TrialKind kind) {
  TrialActionSpace t;
  t.kind = kind;
  t.mesh = &mesh;
  if (kind == TrialKind::P0Actions) {
    t.n_generators = mesh.num_elements();
    return t;
  }
  t.generator_of_vertex.assign(mesh.num_vertices(), -1);
  for (int v = 0; v < mesh.num_vertices(); ++v)
    if (!mesh.is_boundary_vertex(v)) {
      t.generator_of_vertex[v] = t.n_generators++;
      t.vertex_of_generator.push_back(v);
    }
  if (t.n_generators == 0)
    fail(ErrorCode::EmptyTrialSpace, "mesh has no interior vertex for nodal actions");
  return t;
}

std::pair<TrialActionSpace, TestSpace> make_pair_spaces(const SimplicialMesh& mesh,
                                                        PairingKind pairing) {
  TrialKind tk = TrialKind::P0Actions;
  TestSpaceKind vk = TestSpaceKind::P1Bubble;
  switch (pairing) {
    case PairingKind::P0_P1Bubble:
      break;
    case PairingKind::P0_PdPlus1:
      vk = TestSpaceKind::PdPlus1;
      break;
    case PairingKind::P1_P2:
      tk = TrialKind::P1NodalActions;
      vk = TestSpaceKind::P2;
      break;
  }
  auto trial = TrialActionSpace::make(mesh, tk);
  auto test = TestSpace::make(mesh, vk);
  if (trial.n_generators > test.n_dofs)
    fail(ErrorCode::IncompatiblePair, "dim(G) exceeds dim(V) for this mesh");
  return {std::move(trial), std::move(test)};
}

}  // namespace negproj
