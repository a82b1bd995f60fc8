#pragma once

#include "mllc/dataset.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace mllc {

/// Per item k, an L x S_k matrix of P(Y_k = s | Z = l); rows are simplexes.
using ItemProbs = std::vector<Eigen::MatrixXd>;

struct LcParams {
  Eigen::VectorXd cluster_weights;
  ItemProbs item_probs;

  int num_clusters() const { return static_cast<int>(cluster_weights.size()); }
};

struct EmConfig {
  std::uint64_t seed = 1;
  int max_iter = 500;
  double rel_tol = 1e-8;
};

struct LcFit {
  LcParams params;
  double loglik = 0.0;
  std::vector<double> loglik_trace;
  int n_iter = 0;
  bool converged = false;
  int n_params = 0;
  double bic = 0.0;
  Eigen::MatrixXd posteriors;  // N x L
};

/// Throws InputError unless the item tables match the data's schema.
void check_item_probs(const FlatData& flat, const ItemProbs& item_probs, int clusters);

/// N x L matrix of log prod_k P(Y_ik | Z = l) over observed items.
Eigen::MatrixXd log_cluster_densities(const FlatData& flat, const ItemProbs& item_probs);

double lc_loglik(const TwoLevelDataset& data, const LcParams& params);
Eigen::MatrixXd lc_posteriors(const TwoLevelDataset& data, const LcParams& params);

/// EM for the single-level latent class model, started from Dirichlet(1)
/// responsibilities drawn under config.seed.
LcFit lc_em_fit(const TwoLevelDataset& data, int clusters, const EmConfig& config = {});

/// Weighted, floored item probability tables from unit responsibilities (N x L).
ItemProbs item_mstep(const FlatData& flat, const Eigen::Ref<const Eigen::MatrixXd>& responsibilities);

}  // namespace mllc
