#pragma once

#include "mllc/dataset.hpp"
#include "mllc/mllc.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace mllc {

struct ItemProfile {
  std::string name;
  Eigen::MatrixXd percent;  // S_k x L, P(Y_k = s | Z = l) in percent
};

struct CovariateProfile {
  std::string name;
  CovariateKind kind = CovariateKind::categorical;
  std::vector<std::string> labels;  // categories, or {"mean"} for continuous
  Eigen::MatrixXd percent;          // categories x L (percent), or 1 x L cluster means
};

/// Cluster/class summary laid out like a published cluster-profile table.
struct ProfileReport {
  int clusters = 0;
  int classes = 0;
  Eigen::VectorXd cluster_size_percent;   // L
  Eigen::MatrixXd class_cluster_percent;  // H x L
  std::vector<ItemProfile> items;
  std::vector<CovariateProfile> covariates;
  bool hard_assignment = false;
};

struct ProfileOptions {
  /// Modal (argmax) unit assignment instead of posterior-weighted shares.
  bool hard_assignment = false;
};

ProfileReport profile_report(const MllcFit& fit, const TwoLevelDataset& data, const ProfileOptions& options = {});

struct GroupAssignment {
  std::string group_id;
  int assigned_class = 0;  // 0-based
  double confidence = 0.0;
};

/// Modal class per group; ties go to the lower class index.
std::vector<GroupAssignment> classify_groups(const MllcFit& fit, const TwoLevelDataset& data);

/// Aligned plain-text rendering, two decimals. Binary items show the
/// positive (last) level only.
std::string format_profile_text(const ProfileReport& report, const std::vector<GroupAssignment>& groups = {});

}  // namespace mllc
