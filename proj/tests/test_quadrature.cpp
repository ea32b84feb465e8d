#include <doctest.h>

#include <cmath>

#include "core/quadrature.hpp"
#include "support/oracles.hpp"

using namespace negproj;

TEST_SUITE("quadrature") {

TEST_CASE("1d weights sum to 1 and nodes stay inside (0,1)") {
  for (int order = 0; order <= 21; ++order) {
    const auto& rule = quadrature_rule(1, order);
    double s = 0.0;
    for (const auto& qp : rule) {
      CHECK(qp.xref[0] > 0.0);
      CHECK(qp.xref[0] < 1.0);
      s += qp.weight;
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("1d rules integrate monomials exactly up to the stated order") {
  for (int order = 1; order <= 21; ++order) {
    const auto& rule = quadrature_rule(1, order);
    for (int k = 0; k <= order; ++k) {
      double s = 0.0;
      for (const auto& qp : rule) s += qp.weight * std::pow(qp.xref[0], k);
      CHECK(s == doctest::Approx(1.0 / (k + 1)).epsilon(1e-13));
    }
  }
}

TEST_CASE("2d weights sum to the reference area 1/2") {
  for (int order = 0; order <= 20; ++order) {
    const auto& rule = quadrature_rule(2, order);
    double s = 0.0;
    for (const auto& qp : rule) {
      const double l0 = 1.0 - qp.xref[0] - qp.xref[1];
      CHECK(qp.xref[0] >= 0.0);
      CHECK(qp.xref[1] >= 0.0);
      CHECK(l0 >= -1e-15);
      s += qp.weight;
    }
    CHECK(s == doctest::Approx(0.5).epsilon(1e-14));
  }
}

TEST_CASE("2d rules integrate barycentric monomials exactly") {
  // lambda = (1-x-y, x, y) on the reference triangle; the exact value is the
  // factorial moment formula with |T| = 1/2.
  for (int order = 1; order <= 14; ++order) {
    const auto& rule = quadrature_rule(2, order);
    for (int a = 0; a <= order; ++a) {
      for (int b = 0; a + b <= order; ++b) {
        const int c = order - a - b;
        double s = 0.0;
        for (const auto& qp : rule) {
          const double l1 = 1.0 - qp.xref[0] - qp.xref[1];
          s += qp.weight * std::pow(l1, a) * std::pow(qp.xref[0], b) *
               std::pow(qp.xref[1], c);
        }
        const double exact = oracles::triangle_barycentric_moment(0.5, a, b, c);
        CHECK(s == doctest::Approx(exact).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("cubic bubble moment matches |T|/60 on the reference triangle") {
  const auto& rule = quadrature_rule(2, 8);
  double s = 0.0;
  for (const auto& qp : rule) {
    const double l1 = 1.0 - qp.xref[0] - qp.xref[1];
    s += qp.weight * l1 * qp.xref[0] * qp.xref[1];
  }
  CHECK(s == doctest::Approx(0.5 / 60.0).epsilon(1e-14));
}

TEST_CASE("unsupported orders are rejected") {
  CHECK_THROWS_AS(quadrature_rule(1, -1), Error);
  CHECK_THROWS_AS(quadrature_rule(1, 1000), Error);
  CHECK_THROWS_AS(quadrature_rule(2, 1000), Error);
  CHECK_THROWS_AS(quadrature_rule(3, 2), Error);
}

TEST_CASE("gauss_legendre_01 matches the generic 1d rule") {
  auto [x, w] = gauss_legendre_01(5);
  REQUIRE(x.size() == 5);
  double s = 0.0;
  for (size_t i = 0; i < x.size(); ++i) s += w[i] * std::pow(x[i], 9);
  CHECK(s == doctest::Approx(0.1).epsilon(1e-13));
}

}  // TEST_SUITE
