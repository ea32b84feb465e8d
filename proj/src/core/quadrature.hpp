#pragma once

#include <utility>
#include <vector>

#include "core/types.hpp"

namespace negproj {

struct QuadPoint {
  Point xref;     // reference coordinates
  double weight;  // reference weight
};

// Gauss rules on the reference simplex:
//   1D: interval (0,1), weights sum to 1.
//   2D: triangle (0,0),(1,0),(0,1), weights sum to 1/2.
// A rule of a given order integrates all polynomials of total degree <= order
// exactly. Throws for orders outside the supported range.
const std::vector<QuadPoint>& quadrature_rule(int dim, int order);

int max_quadrature_order(int dim);

// Gauss-Legendre nodes/weights for integrating f on (0,1).
std::pair<std::vector<double>, std::vector<double>> gauss_legendre_01(int npoints);

}  // namespace negproj
