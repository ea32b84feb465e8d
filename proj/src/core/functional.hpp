#pragma once

#include <Eigen/Dense>
#include <functional>

#include "core/femspace.hpp"
#include "core/mesh.hpp"
#include "core/types.hpp"

namespace negproj {

// Parametric curve t -> position(t) on [t0, t1] with an analytic velocity,
// used for line sources. Lipschitz with finite arc length.
struct Curve {
  double t0 = 0.0, t1 = 1.0;
  std::function<Point(double)> position;
  std::function<Point(double)> velocity;

  static Curve segment(const Point& a, const Point& b);
  // (t, (t - 0.5)^2 + 0.5): a parabolic arc inside the unit square.
  static Curve parabola(double t0, double t1);
};

// A rough functional f in W^{-1,p}: an evaluable action on test functions.
struct RoughFunctional {
  enum class Kind { DiracDelta, LineSource, Density, GradientAction };

  Kind kind = Kind::DiracDelta;
  Point x0{0.0, 0.0};                    // DiracDelta
  Curve curve;                           // LineSource
  std::function<double(Point)> psi;      // LineSource density along the curve
  std::function<double(Point)> g;        // Density
  std::function<Point(Point)> F;         // GradientAction, <f,v> = ∫ F·∇v
  int quad_order = 6;
  int line_min_panels = 0;  // floor on the panel count, for refinement checks

  static RoughFunctional dirac(const Point& x0);
  static RoughFunctional line_source(Curve curve, std::function<double(Point)> psi);
  static RoughFunctional density(std::function<double(Point)> g, int quad_order = 6);
  static RoughFunctional gradient_action(std::function<Point(Point)> F,
                                         int quad_order = 6);
};

// A Dirac delta pairs continuously with W_0^{1,q} only for q > d.
inline bool delta_pairing_continuous(int dim, double q) { return q > dim; }

// Load vector: component j is the action on global test basis function j.
Eigen::VectorXd assemble_load(const RoughFunctional& f, const TestSpace& V);

// Action on a finite element function (point evaluation for deltas, curve or
// domain quadrature otherwise).
double action(const RoughFunctional& f, const FemFunction& v);

}  // namespace negproj
