#pragma once

#include <string>

#include "core/mesh.hpp"

namespace negproj {

// Plain-text mesh format, one record per line:
//   header:    dim n_vertices n_elements boundary_kind [cx cy r]
//   vertices:  dim coordinates each
//   elements:  dim+1 vertex indices each (order carries the refinement edge)
//   boundary:  all boundary vertex indices on one line
//   levels:    per-element refinement levels (optional when absent in a file)
// Floating point values are written with 17 significant digits so a
// save/load round trip reproduces the mesh bit for bit.
void save_mesh(const SimplicialMesh& mesh, const std::string& path);
SimplicialMesh load_mesh(const std::string& path);

// Shared by the writers: atomically replace `path` with `contents`.
void atomic_write_file(const std::string& path, const std::string& contents);

std::string format_double_17(double v);

}  // namespace negproj
