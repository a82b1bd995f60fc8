#pragma once

#include <Eigen/Dense>

namespace mllc {

/// Nodes and weights of a quadrature rule.
struct QuadratureRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

/// Gauss-Hermite rule for the weight exp(-x^2): Golub-Welsch start, Newton
/// refinement on the orthonormal recurrence for full-precision weights.
QuadratureRule gauss_hermite(int q);

/// The same rule rescaled so that sum_q w_q f(z_q) approximates E[f(Z)], Z ~ N(0, 1).
QuadratureRule standard_normal_rule(int q);

}  // namespace mllc
