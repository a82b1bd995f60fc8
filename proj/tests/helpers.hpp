#pragma once

#include "mllc/dataset.hpp"

#include <string>
#include <vector>

// Builds a dataset from per-group response rows (0-based levels, -1 missing).
inline mllc::TwoLevelDataset make_dataset(const std::vector<std::vector<std::vector<int>>>& groups,
                                          const std::vector<int>& levels,
                                          const std::vector<std::vector<double>>& weights = {}) {
  mllc::TwoLevelDataset d;
  for (std::size_t k = 0; k < levels.size(); ++k) d.schema.items.push_back({"y" + std::to_string(k + 1), levels[k]});
  for (std::size_t j = 0; j < groups.size(); ++j) {
    mllc::Group g{"g" + std::to_string(j + 1), {}};
    for (std::size_t i = 0; i < groups[j].size(); ++i) {
      mllc::Unit u;
      u.id = g.id + "_" + std::to_string(i + 1);
      u.responses = groups[j][i];
      if (!weights.empty()) u.weight = weights[j][i];
      g.units.push_back(u);
    }
    d.groups.push_back(g);
  }
  return mllc::validate_dataset(d, d.schema);
}
