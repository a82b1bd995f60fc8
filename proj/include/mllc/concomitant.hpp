#pragma once

#include "mllc/mllc.hpp"

#include <Eigen/Dense>

namespace mllc {

struct ConcomitantStep {
  ConcomitantCoefficients coefficients;
  double objective_before = 0.0;
  double objective_after = 0.0;
  int iterations = 0;
  bool conditioning_warning = false;
};

/// Expected complete-data log-likelihood of the cluster-membership logit:
/// sum_{i,h,l} v_ihl log P(Z = l | W = h, x_i), with v in N x (H*L) layout.
double concomitant_objective(const Eigen::Ref<const Eigen::MatrixXd>& joint_weights,
                             const Eigen::Ref<const Eigen::MatrixXd>& design, const ConcomitantCoefficients& coef);

/// Newton ascent on concomitant_objective from `current`, baseline cluster L
/// held at zero. A step that fails to increase the objective is halved; a
/// non-negative-definite Hessian falls back to a gradient step and sets the
/// conditioning warning. The returned objective never falls below the start.
ConcomitantStep concomitant_mstep(const Eigen::Ref<const Eigen::MatrixXd>& joint_weights,
                                  const Eigen::Ref<const Eigen::MatrixXd>& design,
                                  const ConcomitantCoefficients& current, int max_newton = 25, double grad_tol = 1e-10);

}  // namespace mllc
