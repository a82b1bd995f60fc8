#include "mllc/coding.hpp"

#include "mllc/errors.hpp"

#include <algorithm>
#include <set>

namespace mllc {

namespace {

CodedCovariate code_categorical_into(const std::vector<int>& column, std::optional<int> reference,
                                     Eigen::MatrixXd& matrix, int first_column) {
  std::set<int> observed(column.begin(), column.end());
  if (observed.size() < 2) throw InputError("degenerate covariate: fewer than 2 observed categories");
  CodedCovariate cov;
  cov.categories.assign(observed.begin(), observed.end());
  cov.reference = reference.value_or(cov.categories.back());
  if (!observed.count(cov.reference)) throw InputError("reference category is not observed");
  cov.first_column = first_column;
  cov.num_columns = static_cast<int>(cov.categories.size()) - 1;

  std::vector<int> column_of(static_cast<std::size_t>(cov.categories.back()) + 1, -1);
  int col = 0;
  for (const int c : cov.categories)
    if (c != cov.reference) column_of[static_cast<std::size_t>(c)] = col++;

  for (std::size_t i = 0; i < column.size(); ++i) {
    const int c = column[i];
    auto row = matrix.row(static_cast<Eigen::Index>(i)).segment(first_column, cov.num_columns);
    if (c == cov.reference) {
      row.setConstant(-1.0);
    } else {
      row.setZero();
      row(column_of[static_cast<std::size_t>(c)]) = 1.0;
    }
  }
  return cov;
}

std::vector<int> coded_categories_excluding_reference(const CodedCovariate& cov) {
  std::vector<int> out;
  for (const int c : cov.categories)
    if (c != cov.reference) out.push_back(c);
  return out;
}

}  // namespace

CodedDesign effect_code(const std::vector<int>& column, std::optional<int> reference) {
  std::set<int> observed(column.begin(), column.end());
  CodedDesign design;
  design.matrix.resize(static_cast<Eigen::Index>(column.size()),
                       std::max<Eigen::Index>(0, static_cast<Eigen::Index>(observed.size()) - 1));
  auto cov = code_categorical_into(column, reference, design.matrix, 0);
  cov.covariate = 0;
  for (const int c : coded_categories_excluding_reference(cov)) design.column_map.push_back({0, c});
  design.covariates.push_back(std::move(cov));
  return design;
}

CodedDesign code_covariates(const TwoLevelDataset& data, const std::vector<std::string>& names,
                            const std::vector<std::pair<std::string, std::string>>& references) {
  const int n = data.num_units();
  std::vector<int> indices;
  int total_cols = 0;
  for (const auto& name : names) {
    const int c = data.find_covariate(name);
    if (c < 0) throw InputError("unknown covariate '" + name + "'");
    indices.push_back(c);
    const auto& info = data.covariates[static_cast<std::size_t>(c)];
    if (info.kind == CovariateKind::continuous) {
      total_cols += 1;
    } else {
      std::set<int> observed;
      for (const auto& g : data.groups)
        for (const auto& u : g.units) observed.insert(static_cast<int>(u.covariates[static_cast<std::size_t>(c)]));
      total_cols += std::max(0, static_cast<int>(observed.size()) - 1);
    }
  }

  CodedDesign design;
  design.matrix.resize(n, total_cols);
  int col = 0;
  for (std::size_t q = 0; q < indices.size(); ++q) {
    const int c = indices[q];
    const auto& info = data.covariates[static_cast<std::size_t>(c)];
    std::vector<double> raw;
    raw.reserve(static_cast<std::size_t>(n));
    for (const auto& g : data.groups)
      for (const auto& u : g.units) raw.push_back(u.covariates[static_cast<std::size_t>(c)]);

    if (info.kind == CovariateKind::continuous) {
      for (int i = 0; i < n; ++i) design.matrix(i, col) = raw[static_cast<std::size_t>(i)];
      CodedCovariate cov;
      cov.covariate = c;
      cov.name = info.name;
      cov.kind = CovariateKind::continuous;
      cov.first_column = col;
      cov.num_columns = 1;
      design.covariates.push_back(cov);
      design.column_map.push_back({c, -1});
      ++col;
      continue;
    }

    std::optional<int> reference;
    for (const auto& [cov_name, label] : references) {
      if (cov_name != info.name) continue;
      const auto it = std::find(info.categories.begin(), info.categories.end(), label);
      if (it == info.categories.end())
        throw InputError("reference '" + label + "' is not a category of '" + info.name + "'");
      reference = static_cast<int>(it - info.categories.begin());
    }
    std::vector<int> column(raw.begin(), raw.end());
    CodedCovariate cov;
    try {
      cov = code_categorical_into(column, reference, design.matrix, col);
    } catch (const InputError& e) {
      throw InputError("covariate '" + info.name + "': " + e.what());
    }
    cov.covariate = c;
    cov.name = info.name;
    for (const int cat : coded_categories_excluding_reference(cov)) design.column_map.push_back({c, cat});
    col += cov.num_columns;
    design.covariates.push_back(std::move(cov));
  }
  return design;
}

Eigen::VectorXd expand_effects(const CodedCovariate& cov, const Eigen::Ref<const Eigen::VectorXd>& coefficients) {
  if (cov.kind == CovariateKind::continuous) return coefficients.head(1);
  Eigen::VectorXd effects(static_cast<Eigen::Index>(cov.categories.size()));
  int col = 0;
  double sum = 0.0;
  for (std::size_t q = 0; q < cov.categories.size(); ++q) {
    if (cov.categories[q] == cov.reference) continue;
    effects(static_cast<Eigen::Index>(q)) = coefficients(col);
    sum += coefficients(col);
    ++col;
  }
  for (std::size_t q = 0; q < cov.categories.size(); ++q)
    if (cov.categories[q] == cov.reference) effects(static_cast<Eigen::Index>(q)) = -sum;
  return effects;
}

}  // namespace mllc
