#pragma once

// Synthetic two-level data and brute-force likelihood oracles.
//
// Random streams: every draw comes from an Rng seeded with
// derive_seed(seed, path). Group j uses path {1, j}: its class (or random
// intercept), then its size when sizes are sampled. Unit i of group j uses
// path {2, j, i}: covariates in declared order, then the cluster, then item
// responses in item order (or the regression outcome), then the weight.
// Datasets are therefore reproducible independently of group traversal order.

#include "mllc/dataset.hpp"
#include "mllc/mllc.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mllc {

enum class WeightScheme { unit, random_positive };

struct CategoricalGenerator {
  std::string name;
  std::vector<std::string> categories;
  Eigen::VectorXd probs;
};

struct MllcScenario {
  MllcParams params;
  int groups = 1;
  int group_size_min = 1;
  int group_size_max = 1;
  std::uint64_t seed = 1;
  WeightScheme weights = WeightScheme::unit;
  /// Item names; defaults to y1..yK.
  std::vector<std::string> item_names;
  /// Unit covariates. With params.concomitant set they are effect coded
  /// (last category as reference) in this order to drive cluster membership.
  std::vector<CategoricalGenerator> covariates;
};

struct SimulatedMllc {
  TwoLevelDataset data;
  std::vector<int> group_class;   // J
  std::vector<int> unit_cluster;  // N, flattened order
};

/// Throws InputError on malformed probability tables or scenario sizes.
void validate_mllc_params(const MllcParams& params, double tol = 1e-9);

SimulatedMllc simulate_mllc(const MllcScenario& scenario);

struct RiScenario {
  /// Binary: intercept followed by one slope per standard-normal covariate
  /// x1..xP. Ordinal: slopes only.
  Eigen::VectorXd beta;
  /// Set for a cumulative-logit outcome with thresholds.size() + 1 levels.
  std::optional<Eigen::VectorXd> thresholds;
  double var_u = 0.0;
  int groups = 1;
  int group_size = 1;
  std::uint64_t seed = 1;
  WeightScheme weights = WeightScheme::unit;
  /// Extra categorical covariates, effect coded (last category reference);
  /// their coefficients follow the continuous slopes in `beta`.
  std::vector<CategoricalGenerator> categorical;
};

struct SimulatedRi {
  TwoLevelDataset data;  // single item "y", covariates x1..xP then categorical
  Eigen::VectorXd random_intercepts;
};

SimulatedRi simulate_ri_logit(const RiScenario& scenario);

/// Six clusters, four classes, eight binary indicators taken from the
/// published cluster-profile table; rows renormalized to exact simplexes.
MllcParams reference_profile_params();

/// Item names in the order used by reference_profile_params.
std::vector<std::string> reference_profile_items();

/// Cluster sizes as printed (percent, before renormalization).
Eigen::VectorXd reference_profile_sizes_raw();

/// P(Y_k = s) implied by the mixture, one vector per item.
std::vector<Eigen::VectorXd> mixture_marginals(const MllcParams& params);

/// Number of enumeration terms sum_j H * L^{n_j}.
double brute_force_size(const TwoLevelDataset& data, const MllcParams& params);

/// Exact log-likelihood by enumerating every (W_j, Z_1j, ..., Z_nj) assignment
/// in probability space. Unit weights other than 1 switch to per-unit
/// enumeration raised to the weight. Rejects instances above `max_terms`.
double brute_force_loglik(const TwoLevelDataset& data, const MllcParams& params, const CodedDesign* design = nullptr,
                          double max_terms = 1e6);

/// A random small instance for oracle comparisons.
struct TinyInstance {
  TwoLevelDataset data;
  MllcParams params;
  std::optional<CodedDesign> design;
};

struct TinyLimits {
  int max_groups = 3;
  int max_group_size = 3;
  int max_items = 3;
  int max_clusters = 3;
  int max_classes = 2;
  bool allow_covariates = true;
  bool allow_weights = true;
  bool allow_missing = true;
};

TinyInstance random_tiny_instance(std::uint64_t seed, const TinyLimits& limits = {});

struct OracleSweep {
  int instances = 0;
  int agreements = 0;
  double max_abs_diff = 0.0;
};

/// Compares mllc_loglik with brute_force_loglik on `count` random tiny instances.
OracleSweep oracle_sweep(std::uint64_t seed, int count, double tol = 1e-10);

}  // namespace mllc
