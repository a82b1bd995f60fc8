#pragma once

#include "mllc/coding.hpp"
#include "mllc/dataset.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mllc {

enum class OutcomeKind { binary, ordinal };

/// Residual variance used in the ICC denominator: 1 (default), or pi^2/3
/// for the logistic latent-response convention.
enum class IccScale { unit, logistic };

struct RegressionSpec {
  std::string outcome;
  OutcomeKind kind = OutcomeKind::binary;
  std::vector<std::string> covariates;
  std::vector<std::pair<std::string, std::string>> references;
  int quadrature_nodes = 20;
  IccScale icc_scale = IccScale::unit;
  int max_iter = 500;
  /// Convergence threshold on max |gradient| / total weight.
  double grad_tol = 1e-9;

  void validate() const;
};

/// Outcome, design and grouping after dropping units with a missing outcome.
struct RegressionData {
  Eigen::MatrixXd x;  // N x P; first column is the intercept for binary outcomes
  Eigen::VectorXi y;  // 0/1, or 0..M-1 for ordinal outcomes
  Eigen::VectorXd w;
  std::vector<int> group_offsets;
  int levels = 2;
  bool intercept = true;
  CodedDesign design;
  std::vector<std::string> column_names;

  int num_groups() const { return static_cast<int>(group_offsets.size()) - 1; }
};

RegressionData prepare_regression(const TwoLevelDataset& data, const RegressionSpec& spec);

/// sum_j log of the adaptive Gauss-Hermite approximation (Q nodes, centered
/// and scaled at each group's posterior mode of u) to
/// int prod_i Bern(y_ij; logistic(x_ij beta + u))^{w_ij} N(u; 0, var_u) du.
double ri_logit_loglik(const RegressionData& data, const Eigen::VectorXd& beta, double var_u, int q);

/// Cumulative-logit analogue: P(Y <= m) = logistic(tau_m - x beta - u).
double ri_ordinal_loglik(const RegressionData& data, const Eigen::VectorXd& beta, const Eigen::VectorXd& thresholds,
                         double var_u, int q);

/// Log-likelihood in unconstrained coordinates with its analytic gradient.
/// Binary: theta = (beta, log sigma_u). Ordinal: theta = (beta, tau_1,
/// log(tau_2 - tau_1), ..., log sigma_u).
double ri_logit_objective(const RegressionData& data, const Eigen::VectorXd& theta, int q, Eigen::VectorXd* grad);
double ri_ordinal_objective(const RegressionData& data, const Eigen::VectorXd& theta, int q, Eigen::VectorXd* grad);

/// Thresholds from the gap parameterization (and back).
Eigen::VectorXd thresholds_from_gaps(const Eigen::Ref<const Eigen::VectorXd>& packed);
Eigen::VectorXd gaps_from_thresholds(const Eigen::Ref<const Eigen::VectorXd>& thresholds);

double compute_icc(double var_u, IccScale scale = IccScale::unit);

struct Estimate {
  std::string name;
  double value = 0.0;
  double se = 0.0;
  double p_value = 1.0;
  bool significant = false;  // p < 0.05
};

/// All category effects of one covariate, the reference included.
struct CovariateEffects {
  std::string covariate;
  CovariateKind kind = CovariateKind::categorical;
  std::vector<Estimate> effects;
  std::string reference;
};

struct RegressionFit {
  std::string outcome;
  OutcomeKind kind = OutcomeKind::binary;
  std::vector<Estimate> beta;        // coded columns (intercept first for binary)
  std::vector<Estimate> thresholds;  // ordinal only, strictly increasing
  std::vector<CovariateEffects> effects;
  Estimate var_u;
  double icc = 0.0;
  IccScale icc_scale = IccScale::unit;
  double loglik = 0.0;
  bool converged = false;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool separation_warning = false;
  int quadrature_nodes = 0;
  int units = 0;
  int groups = 0;
  Eigen::VectorXd theta;       // optimum in unconstrained coordinates
  Eigen::MatrixXd covariance;  // inverse observed information in theta coordinates
};

RegressionFit fit_ri_logit(const TwoLevelDataset& data, const RegressionSpec& spec);
RegressionFit fit_ri_ordinal(const TwoLevelDataset& data, const RegressionSpec& spec);

/// Side-by-side coefficient table, one column per fit, stars at p < 0.05.
std::string format_regression_table(std::span<const RegressionFit> fits);

}  // namespace mllc
