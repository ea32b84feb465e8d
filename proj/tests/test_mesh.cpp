#include <doctest.h>

#include <cmath>
#include <random>

#include "core/mesh.hpp"
#include "support/oracles.hpp"

using namespace negproj;

namespace {

SimplicialMesh single_triangle() {
  SimplicialMesh m;
  m.dim = 2;
  m.vertices = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
  m.elements = {{0, 1, 2}};
  m.refinement_level = {0};
  m.vertex_on_boundary = {1, 1, 1};
  return m;
}

}  // namespace

TEST_SUITE("mesh") {

TEST_CASE("interval builder basics") {
  const auto m = build_interval_mesh(4, 0.0, 1.0);
  CHECK(m.dim == 1);
  CHECK(m.num_vertices() == 5);
  CHECK(m.num_elements() == 4);
  CHECK(m.boundary_vertices() == std::vector<int>{0, 4});
  CHECK(m.total_measure() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(is_conforming(m));

  const auto map = m.element_map(1);  // (0.25, 0.5)
  CHECK(map.det_abs == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(map.h == doctest::Approx(0.25).epsilon(1e-15));
  const Point mid = map.to_physical({0.5, 0.0});
  CHECK(mid[0] == doctest::Approx(0.375).epsilon(1e-15));
  const Point ref = map.to_reference({0.375, 0.0});
  CHECK(ref[0] == doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("right triangle element map") {
  const auto m = build_square_mesh(1);
  // Element 0 has vertices (0,0), (1,1), (1,0): legs of length 1.
  const auto map = m.element_map(0);
  CHECK(map.det_abs == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(map.h == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(map.rho == doctest::Approx(2.0 * 0.5 / (2.0 + std::sqrt(2.0))).epsilon(1e-14));
  CHECK(map.rho <= map.h);
  // Reference gradient (1,0) of the barycentric coordinate of vertex 1 maps to
  // a physical gradient; consistency of to_physical/to_reference instead:
  const Point q = map.to_physical({0.25, 0.5});
  const Point back = map.to_reference(q);
  CHECK(back[0] == doctest::Approx(0.25).epsilon(1e-13));
  CHECK(back[1] == doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("degenerate element is rejected") {
  auto m = single_triangle();
  m.vertices[2] = {2.0, 0.0};  // collinear
  CHECK_THROWS_AS(m.element_map(0), Error);
}

TEST_CASE("square builder basics") {
  const auto m = build_square_mesh(2);
  CHECK(m.num_vertices() == 9);
  CHECK(m.num_elements() == 8);
  CHECK(m.total_measure() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(is_conforming(m));
  int n_interior = 0;
  for (int v = 0; v < m.num_vertices(); ++v)
    if (!m.is_boundary_vertex(v)) ++n_interior;
  CHECK(n_interior == 1);
}

TEST_CASE("interior vertex patch on the 2x2 square") {
  const auto m = build_square_mesh(2);
  const auto patches = m.vertex_patches();
  REQUIRE(patches.size() == 1);
  CHECK(patches[0].elements.size() == 6);
  CHECK(patches[0].eta == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(patches[0].h_max == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-14));
}

TEST_CASE("1d patches on the uniform 4-element mesh") {
  const auto m = build_interval_mesh(4, 0.0, 1.0);
  const auto patches = m.vertex_patches();
  REQUIRE(patches.size() == 3);
  for (const auto& p : patches) {
    CHECK(p.elements.size() == 2);
    CHECK(p.eta == doctest::Approx(0.5).epsilon(1e-14));
  }
}

TEST_CASE("single triangle bisection") {
  const auto m = single_triangle();
  const auto r = refine(m, {0});
  CHECK(r.num_elements() == 2);
  CHECK(r.num_vertices() == 4);
  // Children share the newest vertex: the midpoint of the refinement edge.
  CHECK(r.elements[0][2] == 3);
  CHECK(r.elements[1][2] == 3);
  CHECK(r.vertices[3][0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(r.vertices[3][1] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(r.total_measure() == doctest::Approx(m.total_measure()).epsilon(1e-13));
  CHECK(is_conforming(r));
  CHECK(r.refinement_level[0] == 1);
}

TEST_CASE("empty marked set returns an equal mesh") {
  const auto m = build_square_mesh(2);
  const auto r = refine(m, {});
  CHECK(r.num_elements() == m.num_elements());
  CHECK(r.num_vertices() == m.num_vertices());
  CHECK(r.elements == m.elements);
}

TEST_CASE("closure resolves hanging nodes") {
  const auto m = build_square_mesh(2);
  const auto r = refine(m, {0});
  CHECK(is_conforming(r));
  CHECK(r.total_measure() == doctest::Approx(1.0).epsilon(1e-13));
  // The diagonal neighbour shares the refinement edge, so exactly two
  // elements split.
  CHECK(r.num_elements() == 10);
}

TEST_CASE("marked index out of range is rejected") {
  const auto m = build_square_mesh(1);
  CHECK_THROWS_AS(refine(m, {7}), Error);
}

TEST_CASE("random refinement sequences stay conforming") {
  std::mt19937 rng(1234);
  auto m = build_square_mesh(2);
  for (int round = 0; round < 14; ++round) {
    std::vector<int> marked;
    std::uniform_int_distribution<int> pick(0, m.num_elements() - 1);
    const int k = 1 + round % 4;
    for (int i = 0; i < k; ++i) marked.push_back(pick(rng));
    m = refine(m, marked);
    std::string why;
    const bool ok = is_conforming(m, &why);
    CAPTURE(why);
    REQUIRE(ok);
    CHECK(m.total_measure() == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(m.num_elements() > 50);
}

TEST_CASE("random refinement on the disk stays conforming") {
  std::mt19937 rng(99);
  auto m = build_disk_mesh(1);
  double prev_area = 0.0;
  for (int round = 0; round < 10; ++round) {
    std::vector<int> marked;
    std::uniform_int_distribution<int> pick(0, m.num_elements() - 1);
    for (int i = 0; i < 3; ++i) marked.push_back(pick(rng));
    m = refine(m, marked);
    std::string why;
    const bool ok = is_conforming(m, &why);
    CAPTURE(why);
    REQUIRE(ok);
    const double area = m.total_measure();
    CHECK(area >= prev_area - 1e-13);
    CHECK(area < M_PI);
    prev_area = area;
  }
}

TEST_CASE("disk meshes approach the unit disk") {
  double prev = 0.0;
  for (int level = 0; level <= 4; ++level) {
    const auto m = build_disk_mesh(level);
    CHECK(m.num_elements() == 6 * (1 << (2 * level)));
    for (int v : m.boundary_vertices()) {
      const double r = std::hypot(m.vertices[v][0], m.vertices[v][1]);
      CHECK(std::abs(r - 1.0) <= 1e-12);
    }
    const double area = m.total_measure();
    CHECK(area > prev);
    CHECK(area < M_PI);
    prev = area;
    CHECK(is_conforming(m));
  }
  CHECK(M_PI - prev < 0.01);
}

TEST_CASE("shape regularity under repeated uniform bisection") {
  auto m = build_square_mesh(2);
  for (int i = 0; i < 10; ++i) m = refine_all(m);
  CHECK(m.num_elements() == 8 * (1 << 10));
  double worst = 1.0;
  for (int e = 0; e < m.num_elements(); ++e) {
    const auto map = m.element_map(e);
    worst = std::min(worst, map.rho / map.h);
  }
  CHECK(worst > 0.2);
}

TEST_CASE("locate returns the lowest-index owner") {
  const auto m = build_square_mesh(2);
  // (0.5,0.5) is the shared interior vertex: several elements contain it and
  // the lowest index wins.
  const int own = m.locate({0.5, 0.5});
  CHECK(own == 0);
  CHECK(m.locate({2.0, 2.0}) == -1);

  const ElementLocator loc(m);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-0.2, 1.2);
  for (int i = 0; i < 500; ++i) {
    const Point x{u(rng), u(rng)};
    CHECK(loc.locate(x) == m.locate(x));
  }
}

TEST_CASE("1d locate and containment") {
  const auto m = build_interval_mesh(4, 0.0, 1.0);
  CHECK(m.locate({0.5, 0.0}) == 1);  // boundary of elements 1 and 2: lowest wins
  CHECK(m.locate({0.1, 0.0}) == 0);
  CHECK(m.locate({-0.5, 0.0}) == -1);
  const ElementLocator loc(m);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-0.1, 1.1);
  for (int i = 0; i < 200; ++i) {
    const Point x{u(rng), 0.0};
    CHECK(loc.locate(x) == m.locate(x));
  }
}

TEST_CASE("is_conforming detects a planted hanging node") {
  // Two coarse triangles; refine only the left one by hand-editing so the
  // shared edge keeps a hanging midpoint.
  SimplicialMesh m;
  m.dim = 2;
  m.vertices = {{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}};
  m.elements = {{0, 4, 1}, {4, 2, 1}, {0, 2, 3}};  // 0-2 edge of element 2 hangs at 4
  m.refinement_level = {1, 1, 0};
  m.vertex_on_boundary = {1, 1, 1, 1, 0};
  std::string why;
  CHECK_FALSE(is_conforming(m, &why));
  CHECK(why.find("hangs") != std::string::npos);
}

}  // TEST_SUITE
