#include "core/quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <mutex>

namespace negproj {

namespace {

// Golub-Welsch: nodes are the eigenvalues of the symmetric tridiagonal matrix
// built from the three-term recurrence of the orthogonal polynomials, weights
// are mu0 times the squared first components of the normalized eigenvectors.
void golub_welsch(const std::vector<double>& diag, const std::vector<double>& offdiag,
                  double mu0, std::vector<double>& nodes, std::vector<double>& weights) {
  const int n = static_cast<int>(diag.size());
  Eigen::MatrixXd jm = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) jm(i, i) = diag[i];
  for (int i = 0; i + 1 < n; ++i) {
    jm(i, i + 1) = offdiag[i];
    jm(i + 1, i) = offdiag[i];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jm);
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    nodes[i] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    weights[i] = mu0 * v0 * v0;
  }
}

// Legendre weight 1 on [-1,1], mapped to (0,1).
void legendre_01(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  std::vector<double> diag(n, 0.0), off(n > 0 ? n - 1 : 0);
  for (int k = 1; k < n; ++k) off[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  golub_welsch(diag, off, 2.0, nodes, weights);
  for (int i = 0; i < n; ++i) {
    nodes[i] = 0.5 * (nodes[i] + 1.0);
    weights[i] *= 0.5;
  }
}

// Jacobi weight (1-x) on [-1,1], mapped to weight (1-s) on (0,1).
// Recurrence for alpha=1, beta=0:
//   a_k = -1/((2k+1)(2k+3)),  b_k = k(k+1)/(2k+1)^2.
void jacobi10_01(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  std::vector<double> diag(n), off(n > 0 ? n - 1 : 0);
  for (int k = 0; k < n; ++k) diag[k] = -1.0 / ((2.0 * k + 1.0) * (2.0 * k + 3.0));
  for (int k = 1; k < n; ++k) {
    const double bk = k * (k + 1.0) / ((2.0 * k + 1.0) * (2.0 * k + 1.0));
    off[k - 1] = std::sqrt(bk);
  }
  golub_welsch(diag, off, 2.0, nodes, weights);
  for (int i = 0; i < n; ++i) {
    nodes[i] = 0.5 * (nodes[i] + 1.0);
    weights[i] *= 0.25;
  }
}

std::vector<QuadPoint> build_rule(int dim, int order) {
  const int n = std::max(1, (order + 2) / 2);  // 2n-1 >= order
  std::vector<QuadPoint> rule;
  if (dim == 1) {
    std::vector<double> x, w;
    legendre_01(n, x, w);
    rule.reserve(n);
    for (int i = 0; i < n; ++i) rule.push_back({{x[i], 0.0}, w[i]});
  } else {
    // Conical product rule: x = s, y = t(1-s) turns the triangle integral into
    // int_0^1 int_0^1 f(s, t(1-s)) (1-s) dt ds; the (1-s) factor is absorbed
    // by the Gauss-Jacobi rule so the product is exact for degree <= 2n-1.
    std::vector<double> s, ws, t, wt;
    jacobi10_01(n, s, ws);
    legendre_01(n, t, wt);
    rule.reserve(static_cast<size_t>(n) * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        rule.push_back({{s[i], t[j] * (1.0 - s[i])}, ws[i] * wt[j]});
  }
  return rule;
}

}  // namespace

int max_quadrature_order(int dim) { return dim == 1 ? 60 : 40; }

const std::vector<QuadPoint>& quadrature_rule(int dim, int order) {
  if (dim != 1 && dim != 2)
    fail(ErrorCode::InvalidArgument, "quadrature_rule: dim must be 1 or 2");
  if (order < 0 || order > max_quadrature_order(dim))
    fail(ErrorCode::InvalidArgument,
         "quadrature_rule: unsupported order " + std::to_string(order));
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::vector<QuadPoint>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(dim, order);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, build_rule(dim, order)).first;
  return it->second;
}

std::pair<std::vector<double>, std::vector<double>> gauss_legendre_01(int npoints) {
  if (npoints < 1 || npoints > 64)
    fail(ErrorCode::InvalidArgument, "gauss_legendre_01: npoints out of range");
  std::vector<double> x, w;
  legendre_01(npoints, x, w);
  return {x, w};
}

}  // namespace negproj
