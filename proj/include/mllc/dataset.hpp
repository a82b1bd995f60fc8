#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

namespace mllc {

/// Marker for an unobserved item response (responses are stored 0-based).
inline constexpr int kMissing = -1;

struct ItemDescriptor {
  std::string name;
  int levels = 2;
};

struct ItemSchema {
  std::vector<ItemDescriptor> items;

  int size() const { return static_cast<int>(items.size()); }
  int levels(int k) const { return items[static_cast<std::size_t>(k)].levels; }
  /// Index of the named item, or -1.
  int find(const std::string& name) const;
  /// Throws InputError unless K >= 1, every S_k >= 2 and names are unique.
  void validate() const;
};

enum class CovariateKind { categorical, continuous };

struct CovariateInfo {
  std::string name;
  CovariateKind kind = CovariateKind::categorical;
  /// Declared category labels, in order (categorical only).
  std::vector<std::string> categories;
};

struct Unit {
  std::string id;
  /// One entry per item: 0-based level, or kMissing.
  std::vector<int> responses;
  /// One entry per covariate: category index (categorical) or value (continuous).
  std::vector<double> covariates;
  double weight = 1.0;
};

struct Group {
  std::string id;
  std::vector<Unit> units;
};

struct MissingnessSummary {
  std::vector<std::size_t> per_item;
  std::size_t units_with_missing = 0;
};

/// Level-1 units nested in level-2 groups.
struct TwoLevelDataset {
  ItemSchema schema;
  std::vector<CovariateInfo> covariates;
  std::vector<Group> groups;
  MissingnessSummary missing;

  int num_groups() const { return static_cast<int>(groups.size()); }
  int num_units() const;
  int num_items() const { return schema.size(); }
  int find_covariate(const std::string& name) const;
  double total_weight() const;
};

/// Units laid out contiguously in group order, for the estimators' inner loops.
struct FlatData {
  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> responses;  // N x K
  Eigen::VectorXd weights;                                                      // N
  std::vector<int> group_offsets;                                               // J + 1
  std::vector<int> levels;                                                      // K

  int num_units() const { return static_cast<int>(weights.size()); }
  int num_groups() const { return static_cast<int>(group_offsets.size()) - 1; }
  int num_items() const { return static_cast<int>(levels.size()); }
};

FlatData flatten(const TwoLevelDataset& data);

/// Checks every dataset invariant and tallies item missingness. The first
/// violation is reported as an InputError naming the group, unit and item.
TwoLevelDataset validate_dataset(TwoLevelDataset raw, const ItemSchema& schema);

enum class WeightMode { none, per_group, global };

WeightMode parse_weight_mode(const std::string& text);
const char* to_string(WeightMode mode);

/// per_group: each group's weights sum to n_j. global: all weights sum to N.
TwoLevelDataset normalize_weights(TwoLevelDataset data, WeightMode mode);

}  // namespace mllc
