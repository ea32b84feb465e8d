#include "core/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace negproj {

namespace {

double dist(const Point& a, const Point& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1];
  return std::sqrt(dx * dx + dy * dy);
}

std::pair<int, int> edge_key(int a, int b) { return {std::min(a, b), std::max(a, b)}; }

}  // namespace

std::vector<int> SimplicialMesh::boundary_vertices() const {
  std::vector<int> out;
  for (int v = 0; v < num_vertices(); ++v)
    if (vertex_on_boundary[v]) out.push_back(v);
  return out;
}

double SimplicialMesh::element_measure(int e) const {
  const auto& el = elements[e];
  if (dim == 1) return std::abs(vertices[el[1]][0] - vertices[el[0]][0]);
  const Point& a = vertices[el[0]];
  const Point& b = vertices[el[1]];
  const Point& c = vertices[el[2]];
  return 0.5 * std::abs((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
}

double SimplicialMesh::element_diameter(int e) const {
  const auto& el = elements[e];
  if (dim == 1) return std::abs(vertices[el[1]][0] - vertices[el[0]][0]);
  const double d01 = dist(vertices[el[0]], vertices[el[1]]);
  const double d12 = dist(vertices[el[1]], vertices[el[2]]);
  const double d20 = dist(vertices[el[2]], vertices[el[0]]);
  return std::max({d01, d12, d20});
}

double SimplicialMesh::total_measure() const {
  double s = 0.0;
  for (int e = 0; e < num_elements(); ++e) s += element_measure(e);
  return s;
}

double SimplicialMesh::min_diameter() const {
  double h = std::numeric_limits<double>::infinity();
  for (int e = 0; e < num_elements(); ++e) h = std::min(h, element_diameter(e));
  return h;
}

ElementMap SimplicialMesh::element_map(int e) const {
  ElementMap m;
  m.dim = dim;
  const auto& el = elements[e];
  const Point& a = vertices[el[0]];
  m.offset = a;
  if (dim == 1) {
    const double len = vertices[el[1]][0] - a[0];
    m.A.setZero();
    m.A(0, 0) = len;
    m.det = len;
    m.det_abs = std::abs(len);
    m.h = m.det_abs;
    m.rho = 0.5 * m.h;
    if (m.det_abs <= 1e-300)
      fail(ErrorCode::DegenerateElement, "degenerate element " + std::to_string(e));
    m.A_inv.setZero();
    m.A_inv(0, 0) = 1.0 / len;
    return m;
  }
  const Point& b = vertices[el[1]];
  const Point& c = vertices[el[2]];
  m.A(0, 0) = b[0] - a[0];
  m.A(1, 0) = b[1] - a[1];
  m.A(0, 1) = c[0] - a[0];
  m.A(1, 1) = c[1] - a[1];
  m.det = m.A(0, 0) * m.A(1, 1) - m.A(0, 1) * m.A(1, 0);
  m.det_abs = std::abs(m.det);
  m.h = element_diameter(e);
  if (m.det_abs <= 1e-14 * m.h * m.h)
    fail(ErrorCode::DegenerateElement, "degenerate element " + std::to_string(e));
  const double area = 0.5 * m.det_abs;
  const double per = dist(a, b) + dist(b, c) + dist(c, a);
  m.rho = 2.0 * area / per;
  const double inv = 1.0 / m.det;
  m.A_inv(0, 0) = inv * m.A(1, 1);
  m.A_inv(0, 1) = -inv * m.A(0, 1);
  m.A_inv(1, 0) = -inv * m.A(1, 0);
  m.A_inv(1, 1) = inv * m.A(0, 0);
  return m;
}

bool SimplicialMesh::element_contains(int e, const Point& x, double tol) const {
  if (dim == 1) {
    const double a = vertices[elements[e][0]][0];
    const double b = vertices[elements[e][1]][0];
    const double lo = std::min(a, b), hi = std::max(a, b);
    const double slack = tol * (hi - lo);
    return x[0] >= lo - slack && x[0] <= hi + slack;
  }
  const ElementMap m = element_map(e);
  const Point r = m.to_reference(x);
  const double l0 = 1.0 - r[0] - r[1];
  return r[0] >= -tol && r[1] >= -tol && l0 >= -tol;
}

int SimplicialMesh::locate(const Point& x, double tol) const {
  for (int e = 0; e < num_elements(); ++e)
    if (element_contains(e, x, tol)) return e;
  return -1;
}

std::vector<VertexPatch> SimplicialMesh::vertex_patches() const {
  std::vector<std::vector<int>> star(num_vertices());
  for (int e = 0; e < num_elements(); ++e)
    for (int k = 0; k <= dim; ++k) star[elements[e][k]].push_back(e);
  std::vector<VertexPatch> out;
  for (int v = 0; v < num_vertices(); ++v) {
    if (vertex_on_boundary[v]) continue;
    VertexPatch p;
    p.center_vertex = v;
    p.elements = star[v];
    for (int e : p.elements) {
      p.h_max = std::max(p.h_max, element_diameter(e));
      p.eta += element_measure(e);
    }
    out.push_back(std::move(p));
  }
  return out;
}

SimplicialMesh build_interval_mesh(int n, double a, double b) {
  if (n < 1) fail(ErrorCode::InvalidArgument, "build_interval_mesh: need n >= 1");
  if (!(b > a)) fail(ErrorCode::InvalidArgument, "build_interval_mesh: need b > a");
  std::vector<double> xs(n + 1);
  for (int i = 0; i <= n; ++i) xs[i] = a + (b - a) * i / n;
  return interval_mesh_from_vertices(xs);
}

SimplicialMesh interval_mesh_from_vertices(const std::vector<double>& xs) {
  if (xs.size() < 2) fail(ErrorCode::InvalidArgument, "interval mesh: need >= 2 vertices");
  for (size_t i = 1; i < xs.size(); ++i)
    if (!(xs[i] > xs[i - 1]))
      fail(ErrorCode::InvalidArgument, "interval mesh: vertices must be strictly increasing");
  SimplicialMesh m;
  m.dim = 1;
  m.vertices.reserve(xs.size());
  for (double x : xs) m.vertices.push_back({x, 0.0});
  const int n = static_cast<int>(xs.size()) - 1;
  for (int i = 0; i < n; ++i) m.elements.push_back({i, i + 1, -1});
  m.refinement_level.assign(n, 0);
  m.vertex_on_boundary.assign(xs.size(), 0);
  m.vertex_on_boundary.front() = 1;
  m.vertex_on_boundary.back() = 1;
  return m;
}

SimplicialMesh build_square_mesh(int n) {
  if (n < 1) fail(ErrorCode::InvalidArgument, "build_square_mesh: need n >= 1");
  SimplicialMesh m;
  m.dim = 2;
  const int nv = n + 1;
  m.vertices.reserve(static_cast<size_t>(nv) * nv);
  for (int j = 0; j < nv; ++j)
    for (int i = 0; i < nv; ++i)
      m.vertices.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
  auto vid = [nv](int i, int j) { return i + j * nv; };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
      // Both triangles use the cell diagonal (a,c) as refinement edge, so the
      // initial labeling is compatible across the grid.
      m.elements.push_back({a, c, b});
      m.elements.push_back({a, c, d});
    }
  }
  m.refinement_level.assign(m.elements.size(), 0);
  m.vertex_on_boundary.assign(m.vertices.size(), 0);
  for (int j = 0; j < nv; ++j)
    for (int i = 0; i < nv; ++i)
      if (i == 0 || j == 0 || i == n || j == n) m.vertex_on_boundary[vid(i, j)] = 1;
  return m;
}

SimplicialMesh build_disk_mesh(int levels) {
  if (levels < 0) fail(ErrorCode::InvalidArgument, "build_disk_mesh: need levels >= 0");
  SimplicialMesh m;
  m.dim = 2;
  m.boundary_kind = BoundaryKind::Circle;
  m.circle_center = {0.0, 0.0};
  m.circle_radius = 1.0;
  m.vertices.push_back({0.0, 0.0});
  for (int k = 0; k < 6; ++k) {
    const double ang = k * M_PI / 3.0;
    m.vertices.push_back({std::cos(ang), std::sin(ang)});
  }
  for (int k = 0; k < 6; ++k) {
    // Chord as refinement edge, center as peak: fan triangles meet across
    // radial edges only after the first bisection and stay compatible.
    m.elements.push_back({1 + k, 1 + (k + 1) % 6, 0});
  }
  m.refinement_level.assign(6, 0);
  m.vertex_on_boundary.assign(7, 1);
  m.vertex_on_boundary[0] = 0;
  // One uniform refinement = two bisection sweeps: every triangle splits in 4.
  for (int l = 0; l < 2 * levels; ++l) m = refine_all(m);
  return m;
}

namespace {

SimplicialMesh refine_1d(const SimplicialMesh& mesh, const std::vector<char>& split) {
  SimplicialMesh out;
  out.dim = 1;
  out.boundary_kind = mesh.boundary_kind;
  out.vertices = mesh.vertices;
  out.vertex_on_boundary = mesh.vertex_on_boundary;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& el = mesh.elements[e];
    if (!split[e]) {
      out.elements.push_back(el);
      out.refinement_level.push_back(mesh.refinement_level[e]);
      continue;
    }
    const int mid = static_cast<int>(out.vertices.size());
    out.vertices.push_back(
        {0.5 * (mesh.vertices[el[0]][0] + mesh.vertices[el[1]][0]), 0.0});
    out.vertex_on_boundary.push_back(0);
    out.elements.push_back({el[0], mid, -1});
    out.elements.push_back({mid, el[1], -1});
    out.refinement_level.push_back(mesh.refinement_level[e] + 1);
    out.refinement_level.push_back(mesh.refinement_level[e] + 1);
  }
  return out;
}

}  // namespace

SimplicialMesh refine(const SimplicialMesh& mesh, const std::vector<int>& marked) {
  std::vector<char> split(mesh.num_elements(), 0);
  for (int e : marked) {
    if (e < 0 || e >= mesh.num_elements())
      fail(ErrorCode::InvalidArgument, "refine: marked index out of range");
    split[e] = 1;
  }
  if (mesh.dim == 1) return refine_1d(mesh, split);

  SimplicialMesh out = mesh;
  std::map<std::pair<int, int>, int> midpoint;  // split edge -> midpoint vertex
  std::vector<char> to_split = split;

  for (int round = 0; round < 10000; ++round) {
    bool any = false;
    for (char c : to_split)
      if (c) { any = true; break; }
    if (!any) {
      // Conformity closure: an element whose full edge acquired a midpoint in
      // an earlier round has a hanging node and must be bisected as well.
      for (int e = 0; e < out.num_elements(); ++e) {
        const auto& el = out.elements[e];
        for (int k = 0; k < 3; ++k) {
          const auto key = edge_key(el[k], el[(k + 1) % 3]);
          if (midpoint.count(key)) {
            to_split[e] = 1;
            any = true;
            break;
          }
        }
      }
      if (!any) return out;
    }

    // Edge multiplicities in the current mesh decide boundary status of the
    // midpoints created this round.
    std::map<std::pair<int, int>, int> edge_count;
    for (const auto& el : out.elements)
      for (int k = 0; k < 3; ++k) ++edge_count[edge_key(el[k], el[(k + 1) % 3])];

    std::vector<std::array<int, 3>> new_elements;
    std::vector<int> new_levels;
    new_elements.reserve(out.elements.size() + 64);
    new_levels.reserve(out.elements.size() + 64);
    for (int e = 0; e < out.num_elements(); ++e) {
      const auto el = out.elements[e];
      if (!to_split[e]) {
        new_elements.push_back(el);
        new_levels.push_back(out.refinement_level[e]);
        continue;
      }
      const auto key = edge_key(el[0], el[1]);
      auto it = midpoint.find(key);
      int m;
      if (it != midpoint.end()) {
        m = it->second;
      } else {
        m = out.num_vertices();
        const Point& a = out.vertices[el[0]];
        const Point& b = out.vertices[el[1]];
        Point mp{0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])};
        const bool on_boundary = edge_count[key] == 1;
        if (on_boundary && out.boundary_kind == BoundaryKind::Circle) {
          const double dx = mp[0] - out.circle_center[0];
          const double dy = mp[1] - out.circle_center[1];
          const double r = std::sqrt(dx * dx + dy * dy);
          if (r > 0) {
            mp[0] = out.circle_center[0] + out.circle_radius * dx / r;
            mp[1] = out.circle_center[1] + out.circle_radius * dy / r;
          }
        }
        out.vertices.push_back(mp);
        out.vertex_on_boundary.push_back(on_boundary ? 1 : 0);
        midpoint.emplace(key, m);
      }
      // Children keep the bisection structure: the new vertex is the peak and
      // each child's refinement edge runs from an old base vertex to the old
      // peak.
      new_elements.push_back({el[0], el[2], m});
      new_elements.push_back({el[2], el[1], m});
      new_levels.push_back(out.refinement_level[e] + 1);
      new_levels.push_back(out.refinement_level[e] + 1);
    }
    out.elements = std::move(new_elements);
    out.refinement_level = std::move(new_levels);
    to_split.assign(out.elements.size(), 0);
  }
  fail(ErrorCode::Internal, "refine: conformity closure did not terminate");
}

bool is_conforming(const SimplicialMesh& mesh, std::string* why) {
  auto report = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  const int nv = mesh.num_vertices();
  if (nv == 0 || mesh.num_elements() == 0) return report("empty mesh");

  double diam = 0.0;
  Point lo = mesh.vertices[0], hi = mesh.vertices[0];
  for (const auto& v : mesh.vertices) {
    lo[0] = std::min(lo[0], v[0]);
    lo[1] = std::min(lo[1], v[1]);
    hi[0] = std::max(hi[0], v[0]);
    hi[1] = std::max(hi[1], v[1]);
  }
  diam = std::max(hi[0] - lo[0], hi[1] - lo[1]);
  if (diam <= 0) return report("degenerate vertex set");
  const double tol = 1e-12 * diam;

  {
    std::vector<int> order(nv);
    for (int i = 0; i < nv; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (mesh.vertices[a][0] != mesh.vertices[b][0])
        return mesh.vertices[a][0] < mesh.vertices[b][0];
      return mesh.vertices[a][1] < mesh.vertices[b][1];
    });
    for (int i = 0; i + 1 < nv; ++i) {
      // Sorting by x only bounds the scan; compare against subsequent
      // vertices while x-distance stays under tolerance.
      for (int j = i + 1; j < nv; ++j) {
        if (mesh.vertices[order[j]][0] - mesh.vertices[order[i]][0] > tol) break;
        if (dist(mesh.vertices[order[i]], mesh.vertices[order[j]]) <= tol)
          return report("duplicate vertices " + std::to_string(order[i]) + "," +
                        std::to_string(order[j]));
      }
    }
  }

  for (int e = 0; e < mesh.num_elements(); ++e)
    if (!(mesh.element_measure(e) > 0)) return report("element " + std::to_string(e) + " degenerate");

  if (mesh.dim == 1) {
    std::vector<int> count(nv, 0);
    for (const auto& el : mesh.elements) {
      ++count[el[0]];
      ++count[el[1]];
    }
    for (int v = 0; v < nv; ++v) {
      const int expected = mesh.is_boundary_vertex(v) ? 1 : 2;
      if (count[v] != expected) return report("vertex " + std::to_string(v) + " multiplicity");
    }
    return true;
  }

  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& el : mesh.elements)
    for (int k = 0; k < 3; ++k) ++edge_count[edge_key(el[k], el[(k + 1) % 3])];
  for (const auto& [key, c] : edge_count)
    if (c > 2)
      return report("edge " + std::to_string(key.first) + "-" + std::to_string(key.second) +
                    " shared by " + std::to_string(c) + " elements");

  // Hanging nodes: a vertex lying strictly inside some edge.
  for (const auto& [key, c] : edge_count) {
    (void)c;
    const Point& a = mesh.vertices[key.first];
    const Point& b = mesh.vertices[key.second];
    const double len = dist(a, b);
    for (int v = 0; v < nv; ++v) {
      if (v == key.first || v == key.second) continue;
      const Point& p = mesh.vertices[v];
      if (p[0] < std::min(a[0], b[0]) - tol || p[0] > std::max(a[0], b[0]) + tol ||
          p[1] < std::min(a[1], b[1]) - tol || p[1] > std::max(a[1], b[1]) + tol)
        continue;
      const double cross =
          (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
      if (std::abs(cross) > tol * len) continue;
      const double t =
          ((p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])) / (len * len);
      if (t > 1e-9 && t < 1.0 - 1e-9)
        return report("vertex " + std::to_string(v) + " hangs on edge " +
                      std::to_string(key.first) + "-" + std::to_string(key.second));
    }
  }
  return true;
}

ElementLocator::ElementLocator(const SimplicialMesh& mesh) : mesh_(mesh) {
  Point lo = mesh.vertices.at(0), hi = lo;
  for (const auto& v : mesh.vertices) {
    lo[0] = std::min(lo[0], v[0]);
    lo[1] = std::min(lo[1], v[1]);
    hi[0] = std::max(hi[0], v[0]);
    hi[1] = std::max(hi[1], v[1]);
  }
  x0_ = lo[0];
  y0_ = lo[1];
  const double w = std::max(hi[0] - x0_, 1e-300);
  const double h = mesh.dim == 1 ? 0.0 : std::max(hi[1] - y0_, 0.0);
  const int target = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(
                                      mesh.num_elements()))));
  cell_ = std::max(w, h) / std::max(1, target);
  nx_ = std::max(1, static_cast<int>(std::ceil(w / cell_)));
  ny_ = mesh.dim == 1 ? 1 : std::max(1, static_cast<int>(std::ceil(h / cell_)));
  cells_.assign(static_cast<size_t>(nx_) * ny_, {});
  for (int e = 0; e < mesh.num_elements(); ++e) {
    Point elo = mesh.vertices[mesh.elements[e][0]], ehi = elo;
    for (int k = 0; k <= mesh.dim; ++k) {
      const Point& v = mesh.vertices[mesh.elements[e][k]];
      elo[0] = std::min(elo[0], v[0]);
      elo[1] = std::min(elo[1], v[1]);
      ehi[0] = std::max(ehi[0], v[0]);
      ehi[1] = std::max(ehi[1], v[1]);
    }
    const int i0 = std::clamp(static_cast<int>((elo[0] - x0_) / cell_), 0, nx_ - 1);
    const int i1 = std::clamp(static_cast<int>((ehi[0] - x0_) / cell_), 0, nx_ - 1);
    const int j0 = std::clamp(static_cast<int>((elo[1] - y0_) / cell_), 0, ny_ - 1);
    const int j1 = std::clamp(static_cast<int>((ehi[1] - y0_) / cell_), 0, ny_ - 1);
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i)
        cells_[static_cast<size_t>(j) * nx_ + i].push_back(e);
  }
}

int ElementLocator::locate(const Point& x, double tol) const {
  const int i = std::clamp(static_cast<int>((x[0] - x0_) / cell_), 0, nx_ - 1);
  const int j = mesh_.dim == 1
                    ? 0
                    : std::clamp(static_cast<int>((x[1] - y0_) / cell_), 0, ny_ - 1);
  // Cells hold elements in ascending order, so the first hit is the
  // lowest-index owner.
  for (int e : cells_[static_cast<size_t>(j) * nx_ + i])
    if (mesh_.element_contains(e, x, tol)) return e;
  return -1;
}

}  // namespace negproj
