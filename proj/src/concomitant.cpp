#include "mllc/concomitant.hpp"

#include "mllc/numeric.hpp"

#include <cmath>

namespace mllc {

namespace {

struct Layout {
  int classes;
  int clusters;
  int covariates;
  int block() const { return classes + covariates; }
  int dim() const { return (clusters - 1) * block(); }
  int alpha(int l, int h) const { return l * block() + h; }
  int beta(int l, int c) const { return l * block() + classes + c; }
};

Eigen::VectorXd pack(const Layout& lay, const ConcomitantCoefficients& coef) {
  Eigen::VectorXd theta(lay.dim());
  for (int l = 0; l + 1 < lay.clusters; ++l) {
    theta.segment(lay.alpha(l, 0), lay.classes) = coef.intercepts.col(l) - coef.intercepts.col(lay.clusters - 1);
    theta.segment(lay.beta(l, 0), lay.covariates) = coef.slopes.col(l) - coef.slopes.col(lay.clusters - 1);
  }
  return theta;
}

ConcomitantCoefficients unpack(const Layout& lay, const Eigen::VectorXd& theta) {
  ConcomitantCoefficients coef;
  coef.intercepts = Eigen::MatrixXd::Zero(lay.classes, lay.clusters);
  coef.slopes = Eigen::MatrixXd::Zero(lay.covariates, lay.clusters);
  for (int l = 0; l + 1 < lay.clusters; ++l) {
    coef.intercepts.col(l) = theta.segment(lay.alpha(l, 0), lay.classes);
    coef.slopes.col(l) = theta.segment(lay.beta(l, 0), lay.covariates);
  }
  return coef;
}

/// Linear predictors for every (unit, class), N x (H*L).
Eigen::MatrixXd predictors(const Layout& lay, const Eigen::Ref<const Eigen::MatrixXd>& design,
                           const ConcomitantCoefficients& coef) {
  const Eigen::MatrixXd xb = design * coef.slopes;
  Eigen::MatrixXd eta(design.rows(), lay.classes * lay.clusters);
  for (int h = 0; h < lay.classes; ++h)
    eta.middleCols(h * lay.clusters, lay.clusters) = xb.rowwise() + coef.intercepts.row(h);
  return eta;
}

double objective(const Layout& lay, const Eigen::Ref<const Eigen::MatrixXd>& v,
                 const Eigen::Ref<const Eigen::MatrixXd>& design, const ConcomitantCoefficients& coef) {
  const Eigen::MatrixXd eta = predictors(lay, design, coef);
  double total = 0.0;
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    for (int h = 0; h < lay.classes; ++h) {
      const auto vr = v.row(i).segment(h * lay.clusters, lay.clusters);
      const double t = vr.sum();
      if (t <= 0.0) continue;
      const auto er = eta.row(i).segment(h * lay.clusters, lay.clusters);
      total += vr.dot(er) - t * log_sum_exp(er);
    }
  }
  return total;
}

/// Gradient and negated Hessian of the objective in packed coordinates.
void derivatives(const Layout& lay, const Eigen::Ref<const Eigen::MatrixXd>& v,
                 const Eigen::Ref<const Eigen::MatrixXd>& design, const ConcomitantCoefficients& coef,
                 Eigen::VectorXd& grad, Eigen::MatrixXd& neg_hess) {
  const int free = lay.clusters - 1;
  const Eigen::Index n = v.rows();
  const Eigen::MatrixXd eta = predictors(lay, design, coef);
  grad = Eigen::VectorXd::Zero(lay.dim());
  neg_hess = Eigen::MatrixXd::Zero(lay.dim(), lay.dim());
  Eigen::MatrixXd unit_curv = Eigen::MatrixXd::Zero(n, free * free);  // sum_h A_ih, flattened
  Eigen::MatrixXd resid = Eigen::MatrixXd::Zero(n, free);             // sum_h r_ih

  Eigen::RowVectorXd p(lay.clusters);
  Eigen::MatrixXd a(free, free);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto x = design.row(i);
    for (int h = 0; h < lay.classes; ++h) {
      const auto vr = v.row(i).segment(h * lay.clusters, lay.clusters);
      const double t = vr.sum();
      if (t <= 0.0) continue;
      p = eta.row(i).segment(h * lay.clusters, lay.clusters);
      softmax_inplace(p);
      for (int l = 0; l < free; ++l) {
        const double r = vr(l) - t * p(l);
        grad(lay.alpha(l, h)) += r;
        resid(i, l) += r;
        for (int m = 0; m < free; ++m) a(l, m) = t * ((l == m ? p(l) : 0.0) - p(l) * p(m));
      }
      for (int l = 0; l < free; ++l) {
        for (int m = 0; m < free; ++m) {
          neg_hess(lay.alpha(l, h), lay.alpha(m, h)) += a(l, m);
          if (lay.covariates > 0)
            neg_hess.block(lay.alpha(l, h), lay.beta(m, 0), 1, lay.covariates) += a(l, m) * x;
          unit_curv(i, l * free + m) += a(l, m);
        }
      }
    }
  }
  if (lay.covariates == 0) return;
  for (int l = 0; l < free; ++l) {
    grad.segment(lay.beta(l, 0), lay.covariates) = design.transpose() * resid.col(l);
    for (int m = l; m < free; ++m) {
      const Eigen::MatrixXd xtx = design.transpose() * unit_curv.col(l * free + m).asDiagonal() * design;
      neg_hess.block(lay.beta(l, 0), lay.beta(m, 0), lay.covariates, lay.covariates) = xtx;
      if (m != l) neg_hess.block(lay.beta(m, 0), lay.beta(l, 0), lay.covariates, lay.covariates) = xtx.transpose();
    }
    for (int m = 0; m < free; ++m)
      for (int h = 0; h < lay.classes; ++h)
        neg_hess.block(lay.beta(m, 0), lay.alpha(l, h), lay.covariates, 1) =
            neg_hess.block(lay.alpha(l, h), lay.beta(m, 0), 1, lay.covariates).transpose();
  }
}

}  // namespace

double concomitant_objective(const Eigen::Ref<const Eigen::MatrixXd>& joint_weights,
                             const Eigen::Ref<const Eigen::MatrixXd>& design, const ConcomitantCoefficients& coef) {
  const Layout lay{static_cast<int>(coef.intercepts.rows()), static_cast<int>(coef.intercepts.cols()),
                   static_cast<int>(design.cols())};
  return objective(lay, joint_weights, design, coef);
}

ConcomitantStep concomitant_mstep(const Eigen::Ref<const Eigen::MatrixXd>& joint_weights,
                                  const Eigen::Ref<const Eigen::MatrixXd>& design,
                                  const ConcomitantCoefficients& current, int max_newton, double grad_tol) {
  const Layout lay{static_cast<int>(current.intercepts.rows()), static_cast<int>(current.intercepts.cols()),
                   static_cast<int>(design.cols())};
  ConcomitantStep out;
  Eigen::VectorXd theta = pack(lay, current);
  out.coefficients = unpack(lay, theta);
  double obj = objective(lay, joint_weights, design, out.coefficients);
  out.objective_before = obj;
  out.objective_after = obj;
  if (lay.dim() == 0) return out;

  const double mass = std::max(1.0, joint_weights.sum());
  Eigen::VectorXd grad;
  Eigen::MatrixXd neg_hess;
  for (int it = 0; it < max_newton; ++it) {
    derivatives(lay, joint_weights, design, out.coefficients, grad, neg_hess);
    if (grad.lpNorm<Eigen::Infinity>() < grad_tol * mass) break;

    Eigen::VectorXd direction;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(neg_hess);
    const double scale = std::max(1e-300, neg_hess.diagonal().cwiseAbs().maxCoeff());
    const bool usable = ldlt.info() == Eigen::Success && ldlt.isPositive() &&
                        ldlt.vectorD().minCoeff() > 1e-12 * scale;
    if (usable) {
      direction = ldlt.solve(grad);
      if (!direction.allFinite() || direction.dot(grad) <= 0.0) direction.resize(0);
    }
    double step = 1.0;
    if (direction.size() == 0) {
      out.conditioning_warning = true;
      direction = grad;
      step = 1.0 / scale;
    }

    bool improved = false;
    for (int halving = 0; halving < 40; ++halving) {
      const Eigen::VectorXd trial = theta + step * direction;
      const auto coef = unpack(lay, trial);
      const double trial_obj = objective(lay, joint_weights, design, coef);
      if (std::isfinite(trial_obj) && trial_obj >= obj) {
        const double gain = trial_obj - obj;
        theta = trial;
        out.coefficients = coef;
        obj = trial_obj;
        improved = gain > 1e-15 * std::abs(obj);
        break;
      }
      step *= 0.5;
    }
    ++out.iterations;
    if (!improved) break;
  }
  out.objective_after = obj;
  return out;
}

}  // namespace mllc
