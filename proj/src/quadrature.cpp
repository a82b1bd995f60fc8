#include "mllc/quadrature.hpp"

#include "mllc/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

namespace mllc {

QuadratureRule gauss_hermite(int q) {
  if (q < 1) throw InputError("quadrature needs at least one node");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(q, q);
  for (int k = 1; k < q; ++k) jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(k / 2.0);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);

  QuadratureRule rule;
  rule.nodes = eig.eigenvalues();
  rule.weights.resize(q);
  const double p0 = std::pow(std::numbers::pi, -0.25);
  for (int i = 0; i < q; ++i) {
    double x = rule.nodes(i);
    double deriv = 0.0;
    for (int newton = 0; newton < 3; ++newton) {
      double prev = 0.0;
      double cur = p0;
      for (int j = 1; j <= q; ++j) {
        const double next = x * std::sqrt(2.0 / j) * cur - std::sqrt((j - 1.0) / j) * prev;
        prev = cur;
        cur = next;
      }
      deriv = std::sqrt(2.0 * q) * prev;
      x -= cur / deriv;
    }
    rule.nodes(i) = x;
    rule.weights(i) = 2.0 / (deriv * deriv);
  }
  return rule;
}

QuadratureRule standard_normal_rule(int q) {
  QuadratureRule rule = gauss_hermite(q);
  rule.nodes *= std::numbers::sqrt2;
  rule.weights /= std::sqrt(std::numbers::pi);
  return rule;
}

}  // namespace mllc
