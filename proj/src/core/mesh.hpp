#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "core/types.hpp"

namespace negproj {

enum class BoundaryKind { Flat, Circle };

// Affine map F(xref) = A*xref + offset from the reference simplex onto an
// element. det_abs equals |T| / |Tref|.
struct ElementMap {
  int dim = 1;
  Eigen::Matrix2d A = Eigen::Matrix2d::Identity();
  Eigen::Matrix2d A_inv = Eigen::Matrix2d::Identity();
  Point offset{0.0, 0.0};
  double det = 0.0;
  double det_abs = 0.0;
  double h = 0.0;    // element diameter
  double rho = 0.0;  // radius of the largest inscribed ball

  Point to_physical(const Point& ref) const {
    if (dim == 1) return {offset[0] + A(0, 0) * ref[0], 0.0};
    return {offset[0] + A(0, 0) * ref[0] + A(0, 1) * ref[1],
            offset[1] + A(1, 0) * ref[0] + A(1, 1) * ref[1]};
  }
  Point to_reference(const Point& x) const {
    if (dim == 1) return {A_inv(0, 0) * (x[0] - offset[0]), 0.0};
    const double dx = x[0] - offset[0], dy = x[1] - offset[1];
    return {A_inv(0, 0) * dx + A_inv(0, 1) * dy, A_inv(1, 0) * dx + A_inv(1, 1) * dy};
  }
  // Physical gradient from a reference gradient: grad = A^{-T} grad_ref.
  std::array<double, 2> push_gradient(const std::array<double, 2>& gref) const {
    if (dim == 1) return {A_inv(0, 0) * gref[0], 0.0};
    return {A_inv(0, 0) * gref[0] + A_inv(1, 0) * gref[1],
            A_inv(0, 1) * gref[0] + A_inv(1, 1) * gref[1]};
  }
};

struct VertexPatch {
  int center_vertex = -1;
  std::vector<int> elements;  // ascending element indices
  double h_max = 0.0;
  double eta = 0.0;  // patch measure = |T|/|Tref| for the unit-measure reference patch
};

// Conforming simplicial mesh (intervals in 1D, triangles in 2D). Meshes are
// value types and are treated as immutable once built; refine() returns a new
// mesh. Element vertex order is meaningful in 2D: (v0,v1) is the refinement
// edge for newest-vertex bisection and v2 is the peak.
struct SimplicialMesh {
  int dim = 1;
  std::vector<Point> vertices;
  std::vector<std::array<int, 3>> elements;  // [2] == -1 in 1D
  std::vector<int> refinement_level;
  std::vector<char> vertex_on_boundary;
  BoundaryKind boundary_kind = BoundaryKind::Flat;
  Point circle_center{0.0, 0.0};
  double circle_radius = 0.0;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_elements() const { return static_cast<int>(elements.size()); }
  int vertices_per_element() const { return dim + 1; }
  bool is_boundary_vertex(int v) const { return vertex_on_boundary[v] != 0; }
  std::vector<int> boundary_vertices() const;

  double element_measure(int e) const;
  double element_diameter(int e) const;
  double total_measure() const;
  double min_diameter() const;
  ElementMap element_map(int e) const;

  bool element_contains(int e, const Point& x, double tol = 1e-10) const;
  // Lowest-index element whose closure contains x, or -1.
  int locate(const Point& x, double tol = 1e-10) const;

  // One patch per interior vertex, ordered by vertex index.
  std::vector<VertexPatch> vertex_patches() const;
};

SimplicialMesh build_interval_mesh(int n, double a, double b);
SimplicialMesh interval_mesh_from_vertices(const std::vector<double>& xs);
// Unit square (0,1)^2 as an n x n grid, two triangles per cell.
SimplicialMesh build_square_mesh(int n);
// Unit disk: hexagonal fan around the origin, uniformly refined `levels`
// times with new boundary vertices snapped to the circle.
SimplicialMesh build_disk_mesh(int levels);

// Newest-vertex bisection of the marked elements plus conformity closure.
// An empty marked set returns an equal mesh.
SimplicialMesh refine(const SimplicialMesh& mesh, const std::vector<int>& marked);

inline SimplicialMesh refine_all(const SimplicialMesh& mesh) {
  std::vector<int> all(mesh.num_elements());
  for (int i = 0; i < mesh.num_elements(); ++i) all[i] = i;
  return refine(mesh, all);
}

// Exhaustive conformity audit used by the tests: no duplicate vertices, no
// vertex in the interior of an element edge, every edge shared by at most two
// elements, positive measures.
bool is_conforming(const SimplicialMesh& mesh, std::string* why = nullptr);

// Uniform-grid point locator for batched queries; returns the lowest-index
// containing element like SimplicialMesh::locate.
class ElementLocator {
 public:
  explicit ElementLocator(const SimplicialMesh& mesh);
  int locate(const Point& x, double tol = 1e-10) const;

 private:
  const SimplicialMesh& mesh_;
  int nx_ = 1, ny_ = 1;
  double x0_ = 0, y0_ = 0, cell_ = 1;
  std::vector<std::vector<int>> cells_;
};

}  // namespace negproj
