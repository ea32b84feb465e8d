#include "core/functional.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "core/quadrature.hpp"

namespace negproj {

Curve Curve::segment(const Point& a, const Point& b) {
  Curve c;
  c.t0 = 0.0;
  c.t1 = 1.0;
  c.position = [a, b](double t) -> Point {
    return {a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])};
  };
  c.velocity = [a, b](double) -> Point { return {b[0] - a[0], b[1] - a[1]}; };
  return c;
}

Curve Curve::parabola(double t0, double t1) {
  Curve c;
  c.t0 = t0;
  c.t1 = t1;
  c.position = [](double t) -> Point { return {t, (t - 0.5) * (t - 0.5) + 0.5}; };
  c.velocity = [](double t) -> Point { return {1.0, 2.0 * (t - 0.5)}; };
  return c;
}

RoughFunctional RoughFunctional::dirac(const Point& x0) {
  RoughFunctional f;
  f.kind = Kind::DiracDelta;
  f.x0 = x0;
  return f;
}

RoughFunctional RoughFunctional::line_source(Curve curve,
                                             std::function<double(Point)> psi) {
  RoughFunctional f;
  f.kind = Kind::LineSource;
  f.curve = std::move(curve);
  f.psi = std::move(psi);
  return f;
}

RoughFunctional RoughFunctional::density(std::function<double(Point)> g,
                                         int quad_order) {
  RoughFunctional f;
  f.kind = Kind::Density;
  f.g = std::move(g);
  f.quad_order = quad_order;
  return f;
}

RoughFunctional RoughFunctional::gradient_action(std::function<Point(Point)> F,
                                                 int quad_order) {
  RoughFunctional f;
  f.kind = Kind::GradientAction;
  f.F = std::move(F);
  f.quad_order = quad_order;
  return f;
}

namespace {

[[noreturn]] void outside_domain(const Point& x) {
  std::ostringstream os;
  os << "point (" << x[0] << ", " << x[1] << ") is outside the domain";
  fail(ErrorCode::OutOfDomain, os.str());
}

// Composite Gauss panels along the curve, short enough relative to the mesh
// that each panel sits essentially inside one element.
int panel_count(const Curve& c, double h_min, int min_panels) {
  double vmax = 0.0;
  constexpr int kSamples = 256;
  for (int i = 0; i <= kSamples; ++i) {
    const double t = c.t0 + (c.t1 - c.t0) * i / kSamples;
    const Point v = c.velocity(t);
    vmax = std::max(vmax, std::hypot(v[0], v[1]));
  }
  const double target = h_min / 4.0;
  int n = static_cast<int>(std::ceil(vmax * (c.t1 - c.t0) / target));
  n = std::max({n, 1, min_panels});
  return std::min(n, 1 << 20);
}

// Calls visit(x, owner_element, weight) with weight = psi*|x'|*w dt. Panels
// whose sample points straddle an element interface are bisected so each leaf
// panel integrates a smooth restriction; for straight segments inside convex
// elements the endpoint test makes this exact.
template <typename Visit>
void line_quadrature(const RoughFunctional& f, const SimplicialMesh& mesh,
                     const ElementLocator& locator, int min_panels, Visit&& visit) {
  const auto [nodes, weights] = gauss_legendre_01(4);
  const int n = panel_count(f.curve, mesh.min_diameter(), min_panels);
  const double dt = (f.curve.t1 - f.curve.t0) / n;

  auto owner_at = [&](double t) {
    const Point x = f.curve.position(t);
    const int e = locator.locate(x);
    if (e < 0) outside_domain(x);
    return e;
  };
  constexpr int kMaxDepth = 48;
  auto emit = [&](auto&& self, double a, double b, int depth) -> void {
    std::array<int, 4> owner{};
    bool split = false;
    const int at_a = owner_at(a), at_b = owner_at(b);
    for (size_t k = 0; k < nodes.size(); ++k) {
      owner[k] = owner_at(a + nodes[k] * (b - a));
      split = split || owner[k] != at_a;
    }
    split = split || at_b != at_a;
    if (split && depth < kMaxDepth) {
      const double mid = 0.5 * (a + b);
      self(self, a, mid, depth + 1);
      self(self, mid, b, depth + 1);
      return;
    }
    for (size_t k = 0; k < nodes.size(); ++k) {
      const double t = a + nodes[k] * (b - a);
      const Point x = f.curve.position(t);
      const Point v = f.curve.velocity(t);
      const double speed = std::hypot(v[0], v[1]);
      visit(x, owner[k], f.psi(x) * speed * weights[k] * (b - a));
    }
  };
  for (int panel = 0; panel < n; ++panel) {
    const double a = f.curve.t0 + panel * dt;
    emit(emit, a, std::min(a + dt, f.curve.t1), 0);
  }
}

}  // namespace

Eigen::VectorXd assemble_load(const RoughFunctional& f, const TestSpace& V) {
  const SimplicialMesh& mesh = *V.mesh;
  Eigen::VectorXd load = Eigen::VectorXd::Zero(V.n_dofs);

  switch (f.kind) {
    case RoughFunctional::Kind::DiracDelta: {
      const int e = mesh.locate(f.x0);
      if (e < 0) outside_domain(f.x0);
      const Point xref = mesh.element_map(e).to_reference(f.x0);
      const BasisEval b = eval_basis(V, e, xref);
      const auto& dofs = V.dof_map[e];
      for (int k = 0; k < b.n; ++k)
        if (dofs[k] >= 0) load[dofs[k]] += b.value[k];
      return load;
    }
    case RoughFunctional::Kind::Density:
    case RoughFunctional::Kind::GradientAction: {
      const auto& rule = quadrature_rule(mesh.dim, f.quad_order);
      for (int e = 0; e < mesh.num_elements(); ++e) {
        const ElementMap map = mesh.element_map(e);
        const auto& dofs = V.dof_map[e];
        for (const auto& qp : rule) {
          const Point x = map.to_physical(qp.xref);
          const double w = qp.weight * map.det_abs;
          const BasisEval b = eval_basis(V, e, qp.xref);
          if (f.kind == RoughFunctional::Kind::Density) {
            const double gv = f.g(x);
            for (int k = 0; k < b.n; ++k)
              if (dofs[k] >= 0) load[dofs[k]] += w * gv * b.value[k];
          } else {
            const Point Fv = f.F(x);
            for (int k = 0; k < b.n; ++k)
              if (dofs[k] >= 0)
                load[dofs[k]] += w * (Fv[0] * b.grad[k][0] + Fv[1] * b.grad[k][1]);
          }
        }
      }
      return load;
    }
    case RoughFunctional::Kind::LineSource: {
      const ElementLocator locator(mesh);
      line_quadrature(f, mesh, locator, f.line_min_panels,
                      [&](const Point& x, int e, double w) {
                        const Point xref = mesh.element_map(e).to_reference(x);
                        const BasisEval b = eval_basis(V, e, xref);
                        const auto& dofs = V.dof_map[e];
                        for (int k = 0; k < b.n; ++k)
                          if (dofs[k] >= 0) load[dofs[k]] += w * b.value[k];
                      });
      return load;
    }
  }
  fail(ErrorCode::InvalidArgument, "unknown functional kind");
}

double action(const RoughFunctional& f, const FemFunction& v) {
  const SimplicialMesh& mesh = *v.space->mesh;
  switch (f.kind) {
    case RoughFunctional::Kind::DiracDelta:
      return v.value_at(f.x0);
    case RoughFunctional::Kind::Density:
    case RoughFunctional::Kind::GradientAction: {
      const auto& rule = quadrature_rule(mesh.dim, f.quad_order);
      double acc = 0.0;
      for (int e = 0; e < mesh.num_elements(); ++e) {
        const ElementMap map = mesh.element_map(e);
        for (const auto& qp : rule) {
          const Point x = map.to_physical(qp.xref);
          const double w = qp.weight * map.det_abs;
          if (f.kind == RoughFunctional::Kind::Density) {
            acc += w * f.g(x) * v.value_in(e, qp.xref);
          } else {
            const Point Fv = f.F(x);
            const Point gv = v.gradient_in(e, qp.xref);
            acc += w * (Fv[0] * gv[0] + Fv[1] * gv[1]);
          }
        }
      }
      return acc;
    }
    case RoughFunctional::Kind::LineSource: {
      const ElementLocator locator(mesh);
      double acc = 0.0;
      line_quadrature(f, mesh, locator, f.line_min_panels,
                      [&](const Point& x, int e, double w) {
                        const Point xref = mesh.element_map(e).to_reference(x);
                        acc += w * v.value_in(e, xref);
                      });
      return acc;
    }
  }
  fail(ErrorCode::InvalidArgument, "unknown functional kind");
}

}  // namespace negproj
