#pragma once

#include "mllc/coding.hpp"
#include "mllc/dataset.hpp"
#include "mllc/lc.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace mllc {

/// Multinomial-logit coefficients for P(Z = l | W = h, x). The last cluster
/// is the baseline: its column is identically zero in both matrices.
struct ConcomitantCoefficients {
  Eigen::MatrixXd intercepts;  // H x L
  Eigen::MatrixXd slopes;      // C x L
};

struct MllcParams {
  Eigen::VectorXd class_weights;        // H
  Eigen::MatrixXd cluster_given_class;  // H x L; weighted unit average when covariates are present
  std::optional<ConcomitantCoefficients> concomitant;
  ItemProbs item_probs;

  int num_classes() const { return static_cast<int>(class_weights.size()); }
  int num_clusters() const {
    return static_cast<int>(concomitant ? concomitant->intercepts.cols() : cluster_given_class.cols());
  }
};

struct MllcPosteriors {
  Eigen::MatrixXd group_class;               // J x H
  Eigen::MatrixXd unit_cluster_given_class;  // N x (H*L), column h*L + l
  Eigen::MatrixXd unit_cluster;              // N x L
};

struct MllcFit {
  MllcParams params;
  MllcPosteriors posteriors;
  double loglik = 0.0;
  std::vector<double> loglik_trace;
  int n_iter = 0;
  bool converged = false;
  int n_params = 0;
  double bic = 0.0;  // with N = level-1 units
  bool degenerate_l1 = false;
  int conditioning_warnings = 0;
};

/// Free parameters: (H-1) + sum_k L(S_k-1) + H(L-1), or (L-1)(H+C) cluster
/// terms when C coded covariate columns drive cluster membership.
int count_free_parameters(const std::vector<int>& levels, int clusters, int classes,
                          std::optional<int> covariate_columns = std::nullopt);

/// log P(Z = l | W = h, x_i) for every unit, as an N x (H*L) matrix.
Eigen::MatrixXd log_cluster_given_class(const MllcParams& params, const CodedDesign* design, int units);

double mllc_loglik(const TwoLevelDataset& data, const MllcParams& params, const CodedDesign* design = nullptr);

MllcPosteriors mllc_posteriors(const TwoLevelDataset& data, const MllcParams& params,
                               const CodedDesign* design = nullptr);

/// EM for the multilevel latent class model. With a design, cluster
/// membership follows a multinomial logit on the coded covariates with
/// class-specific intercepts.
MllcFit mllc_em_fit(const TwoLevelDataset& data, int clusters, int classes, const CodedDesign* design = nullptr,
                    const EmConfig& config = {});

/// Weighted average over units of P(Z = l | W = h, x_i).
Eigen::MatrixXd average_cluster_given_class(const MllcParams& params, const CodedDesign& design,
                                            const Eigen::VectorXd& weights);

/// Throws InputError when the parameter shapes disagree with each other or the data.
void check_mllc_params(const FlatData& flat, const MllcParams& params, const CodedDesign* design);

}  // namespace mllc
