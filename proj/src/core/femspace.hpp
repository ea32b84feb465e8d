#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "core/mesh.hpp"
#include "core/types.hpp"

namespace negproj {

// Conforming Lagrange-type test spaces V_m ⊂ W₀¹,q with homogeneous Dirichlet
// DOFs eliminated at construction. PdPlus1 resolves to degree d+1 on a mesh
// of dimension d (quadratics on intervals, cubics on triangles).
enum class TestSpaceKind { P1, P1Bubble, P2, PdPlus1 };

// Local basis layout per element, fixed and mirrored by eval_basis:
//   P1:       [v0, v1(, v2)]
//   P1Bubble: [v0, v1(, v2), bubble]
//   P2 1D:    [v0, v1, midpoint]
//   P2 2D:    [v0, v1, v2, e01, e12, e02]
//   P3 2D:    [v0, v1, v2, e01_near0, e01_near1, e12_near1, e12_near2,
//              e02_near0, e02_near2, center]
struct TestSpace {
  TestSpaceKind kind = TestSpaceKind::P1;
  const SimplicialMesh* mesh = nullptr;
  int degree = 1;        // polynomial degree of the nodal part
  bool has_bubble = false;
  int n_dofs = 0;
  // dof_map[element][local] = global dof index, or -1 for eliminated DOFs.
  std::vector<std::vector<int>> dof_map;
  // For interior vertices: vertex id -> dof (-1 if on boundary).
  std::vector<int> vertex_dof;

  static TestSpace make(const SimplicialMesh& mesh, TestSpaceKind kind);

  int local_size() const;
  int n_elements() const { return mesh->num_elements(); }
};

constexpr int kMaxLocalBasis = 10;

struct BasisEval {
  int n = 0;
  std::array<double, kMaxLocalBasis> value{};
  std::array<Point, kMaxLocalBasis> grad{};  // physical-space gradients
};

// Values and physical gradients of all local basis functions of `space` on
// `element` at reference point xref. Ordering matches TestSpace::dof_map.
BasisEval eval_basis(const TestSpace& space, int element, const Point& xref);

struct FemFunction {
  const TestSpace* space = nullptr;
  Eigen::VectorXd coeffs;  // length space->n_dofs

  FemFunction() = default;
  explicit FemFunction(const TestSpace& s)
      : space(&s), coeffs(Eigen::VectorXd::Zero(s.n_dofs)) {}
  FemFunction(const TestSpace& s, Eigen::VectorXd c);

  double value_in(int element, const Point& xref) const;
  Point gradient_in(int element, const Point& xref) const;
  // Locates the owning element (lowest index on ties). Vanishes on ∂Ω.
  double value_at(const Point& x) const;
};

// Element-local and global W¹,q seminorms of a discrete function, computed
// with the same fixed-order rule as the duality form so that the identity
// <J(r),r> = ‖r‖^q holds to machine precision in the discrete setting.
constexpr int kSeminormQuadOrder = 5;

double wq_seminorm(const FemFunction& u, double q);
std::vector<double> wq_seminorm_local(const FemFunction& u, double q);

// Trial action spaces G_n ⊂ V*: element averages or interior nodal moments.
enum class TrialKind { P0Actions, P1NodalActions };

struct TrialActionSpace {
  TrialKind kind = TrialKind::P0Actions;
  const SimplicialMesh* mesh = nullptr;
  int n_generators = 0;
  std::vector<int> vertex_of_generator;  // P1NodalActions only
  std::vector<int> generator_of_vertex;  // vertex id -> generator or -1

  static TrialActionSpace make(const SimplicialMesh& mesh, TrialKind kind);
};

enum class PairingKind { P0_P1Bubble, P0_PdPlus1, P1_P2 };

// Builds a compatible (G_n, V_m) pair on one mesh. Guarantees
// dim(G) <= dim(V); P1_P2 requires at least one interior vertex.
std::pair<TrialActionSpace, TestSpace> make_pair_spaces(const SimplicialMesh& mesh,
                                                        PairingKind pairing);

}  // namespace negproj
