#pragma once

#include "mllc/lc.hpp"
#include "mllc/mllc.hpp"

#include <vector>

namespace mllc {

/// Cluster order for reporting: descending expected number of positive
/// (last-level) responses when every item is binary, otherwise descending
/// cluster size. order[p] is the current index of the cluster placed at p.
std::vector<int> canonical_cluster_order(const ItemProbs& item_probs, const Eigen::VectorXd& cluster_sizes);

/// Relabels clusters and classes; order vectors follow the convention of
/// canonical_cluster_order. Every table and posterior matrix is permuted.
MllcFit permute_labels(MllcFit fit, const std::vector<int>& cluster_order, const std::vector<int>& class_order);

/// Clusters by canonical_cluster_order, classes by descending class weight.
MllcFit canonicalize_labels(MllcFit fit);
LcFit canonicalize_labels(LcFit fit);

/// Marginal cluster sizes sum_h P(W=h) P(Z=l|W=h).
Eigen::VectorXd marginal_cluster_sizes(const MllcParams& params);

/// Cluster permutation of `estimate` minimizing total absolute item-probability
/// distance to `reference` (exhaustive for L <= 8, greedy beyond).
/// order[p] is the estimated cluster matched to reference cluster p.
std::vector<int> align_clusters(const ItemProbs& estimate, const ItemProbs& reference);

/// Class permutation minimizing the distance between class-conditional cluster rows.
std::vector<int> align_classes(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& reference);

}  // namespace mllc
