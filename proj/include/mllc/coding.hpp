#pragma once

#include "mllc/dataset.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace mllc {

struct CodedColumn {
  int covariate = -1;  // index into TwoLevelDataset::covariates
  int category = -1;   // category encoded by this column; -1 for continuous
};

struct CodedCovariate {
  int covariate = -1;
  std::string name;
  CovariateKind kind = CovariateKind::categorical;
  /// Observed categories in declared order (categorical only).
  std::vector<int> categories;
  int reference = -1;
  int first_column = 0;
  int num_columns = 0;
};

/// Coded covariate matrix, one row per unit in flattened (group) order.
struct CodedDesign {
  Eigen::MatrixXd matrix;
  std::vector<CodedColumn> column_map;
  std::vector<CodedCovariate> covariates;

  int cols() const { return static_cast<int>(matrix.cols()); }
  int rows() const { return static_cast<int>(matrix.rows()); }
};

/// Effect coding of one categorical column given as category indices. The
/// coded categories are those observed, in ascending index order; the
/// reference defaults to the last of them. Rows of the reference category
/// are -1 in every column.
CodedDesign effect_code(const std::vector<int>& column, std::optional<int> reference = std::nullopt);

/// Builds the design for the named covariates of a dataset. Categorical
/// covariates are effect coded; continuous ones enter as a single column.
/// `references` optionally maps covariate name to a reference label.
CodedDesign code_covariates(const TwoLevelDataset& data, const std::vector<std::string>& names,
                            const std::vector<std::pair<std::string, std::string>>& references = {});

/// Effects of every category of a coded covariate, including the implied
/// reference effect -(sum of the estimated ones), in the covariate's category order.
Eigen::VectorXd expand_effects(const CodedCovariate& cov, const Eigen::Ref<const Eigen::VectorXd>& coefficients);

}  // namespace mllc
