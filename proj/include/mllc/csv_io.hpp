#pragma once

#include "mllc/dataset.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace mllc {

/// Items and covariates declared by a schema file.
struct DatasetSchema {
  ItemSchema items;
  std::vector<CovariateInfo> covariates;
};

/// Schema JSON: {"items": [{"name", "levels"}], "covariates": [{"name",
/// "type": "categorical"|"continuous", "categories": [...]}]}.
DatasetSchema parse_schema(const std::string& json_text);
std::string schema_to_json(const TwoLevelDataset& data);

struct LoadSummary {
  int rows = 0;
  int columns = 0;
  int groups = 0;
  int units = 0;
  MissingnessSummary missing;
};

struct LoadedData {
  TwoLevelDataset data;
  LoadSummary summary;
};

/// One row per unit: group_id, unit_id, weight, item columns (1-based levels,
/// empty = missing), covariate columns (category label or number). Rows of a
/// group need not be contiguous; groups keep first-appearance order.
LoadedData parse_csv(std::istream& in, const DatasetSchema& schema);
LoadedData load_csv(const std::string& csv_path, const std::string& schema_path);

void write_csv(const TwoLevelDataset& data, std::ostream& out);

/// Writes through a temporary sibling file and renames it into place.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

}  // namespace mllc
