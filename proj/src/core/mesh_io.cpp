#include "core/mesh_io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace negproj {

std::string format_double_17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void atomic_write_file(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot open " + tmp + " for writing");
    out << contents;
    out.flush();
    if (!out) fail(ErrorCode::IoError, "short write to " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    fail(ErrorCode::IoError, "cannot rename " + tmp + " to " + path);
  }
}

void save_mesh(const SimplicialMesh& mesh, const std::string& path) {
  std::ostringstream out;
  out << mesh.dim << ' ' << mesh.num_vertices() << ' ' << mesh.num_elements() << ' ';
  if (mesh.boundary_kind == BoundaryKind::Flat) {
    out << "flat\n";
  } else {
    out << "circle " << format_double_17(mesh.circle_center[0]) << ' '
        << format_double_17(mesh.circle_center[1]) << ' '
        << format_double_17(mesh.circle_radius) << '\n';
  }
  for (const auto& v : mesh.vertices) {
    out << format_double_17(v[0]);
    if (mesh.dim == 2) out << ' ' << format_double_17(v[1]);
    out << '\n';
  }
  for (const auto& el : mesh.elements) {
    out << el[0] << ' ' << el[1];
    if (mesh.dim == 2) out << ' ' << el[2];
    out << '\n';
  }
  {
    bool first = true;
    for (int v : mesh.boundary_vertices()) {
      if (!first) out << ' ';
      out << v;
      first = false;
    }
    out << '\n';
  }
  for (int e = 0; e < mesh.num_elements(); ++e)
    out << mesh.refinement_level[e] << (e + 1 == mesh.num_elements() ? '\n' : ' ');
  atomic_write_file(path, out.str());
}

namespace {

[[noreturn]] void parse_fail(const std::string& path, int line, const std::string& msg) {
  fail(ErrorCode::ParseError,
       path + ": parse error at line " + std::to_string(line) + ": " + msg);
}

}  // namespace

SimplicialMesh load_mesh(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  std::string line;
  int lineno = 0;
  auto next_line = [&](const char* what) {
    if (!std::getline(in, line)) parse_fail(path, lineno + 1, std::string("missing ") + what);
    ++lineno;
  };

  SimplicialMesh mesh;
  next_line("header");
  {
    std::istringstream ss(line);
    int nv = 0, ne = 0;
    std::string kind;
    if (!(ss >> mesh.dim >> nv >> ne >> kind)) parse_fail(path, lineno, "malformed header");
    if (mesh.dim != 1 && mesh.dim != 2) parse_fail(path, lineno, "dim must be 1 or 2");
    if (nv < 2 || ne < 1) parse_fail(path, lineno, "empty mesh");
    if (kind == "flat") {
      mesh.boundary_kind = BoundaryKind::Flat;
    } else if (kind == "circle") {
      mesh.boundary_kind = BoundaryKind::Circle;
      if (!(ss >> mesh.circle_center[0] >> mesh.circle_center[1] >> mesh.circle_radius))
        parse_fail(path, lineno, "circle boundary needs center and radius");
      if (!(mesh.circle_radius > 0)) parse_fail(path, lineno, "circle radius must be positive");
    } else {
      parse_fail(path, lineno, "unknown boundary kind '" + kind + "'");
    }
    mesh.vertices.reserve(nv);
    mesh.elements.reserve(ne);
    for (int i = 0; i < nv; ++i) {
      next_line("vertex");
      std::istringstream vs(line);
      Point p{0.0, 0.0};
      if (!(vs >> p[0])) parse_fail(path, lineno, "malformed vertex");
      if (mesh.dim == 2 && !(vs >> p[1])) parse_fail(path, lineno, "malformed vertex");
      mesh.vertices.push_back(p);
    }
    for (int e = 0; e < ne; ++e) {
      next_line("element");
      std::istringstream es(line);
      std::array<int, 3> el{-1, -1, -1};
      for (int k = 0; k <= mesh.dim; ++k) {
        if (!(es >> el[k])) parse_fail(path, lineno, "malformed element");
        if (el[k] < 0 || el[k] >= nv) parse_fail(path, lineno, "vertex index out of range");
      }
      mesh.elements.push_back(el);
    }
    mesh.vertex_on_boundary.assign(nv, 0);
    next_line("boundary vertex list");
    {
      std::istringstream bs(line);
      int v;
      while (bs >> v) {
        if (v < 0 || v >= nv) parse_fail(path, lineno, "boundary index out of range");
        mesh.vertex_on_boundary[v] = 1;
      }
    }
    mesh.refinement_level.assign(ne, 0);
    if (std::getline(in, line)) {
      ++lineno;
      std::istringstream ls(line);
      for (int e = 0; e < ne; ++e)
        if (!(ls >> mesh.refinement_level[e]))
          parse_fail(path, lineno, "malformed refinement level list");
    }
  }

  for (int e = 0; e < mesh.num_elements(); ++e) {
    if (!(mesh.element_measure(e) > 0))
      fail(ErrorCode::ParseError, path + ": element " + std::to_string(e) + " is degenerate");
  }
  if (mesh.boundary_kind == BoundaryKind::Circle) {
    for (int v : mesh.boundary_vertices()) {
      const double dx = mesh.vertices[v][0] - mesh.circle_center[0];
      const double dy = mesh.vertices[v][1] - mesh.circle_center[1];
      const double r = std::sqrt(dx * dx + dy * dy);
      if (std::abs(r - mesh.circle_radius) > 1e-12 * mesh.circle_radius)
        fail(ErrorCode::ParseError, path + ": boundary vertex " + std::to_string(v) +
                                        " is not on the circle");
    }
  }
  return mesh;
}

}  // namespace negproj
