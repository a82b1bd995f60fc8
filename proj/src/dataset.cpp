#include "mllc/dataset.hpp"

#include "mllc/errors.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace mllc {

int ItemSchema::find(const std::string& name) const {
  for (std::size_t k = 0; k < items.size(); ++k)
    if (items[k].name == name) return static_cast<int>(k);
  return -1;
}

void ItemSchema::validate() const {
  if (items.empty()) throw InputError("schema declares no items");
  std::set<std::string> seen;
  for (const auto& item : items) {
    if (item.levels < 2)
      throw InputError("item '" + item.name + "' declares " + std::to_string(item.levels) + " levels; at least 2 required");
    if (!seen.insert(item.name).second) throw InputError("duplicate item name '" + item.name + "'");
  }
}

int TwoLevelDataset::num_units() const {
  int n = 0;
  for (const auto& g : groups) n += static_cast<int>(g.units.size());
  return n;
}

int TwoLevelDataset::find_covariate(const std::string& name) const {
  for (std::size_t c = 0; c < covariates.size(); ++c)
    if (covariates[c].name == name) return static_cast<int>(c);
  return -1;
}

double TwoLevelDataset::total_weight() const {
  double w = 0.0;
  for (const auto& g : groups)
    for (const auto& u : g.units) w += u.weight;
  return w;
}

FlatData flatten(const TwoLevelDataset& data) {
  FlatData flat;
  const int n = data.num_units();
  const int k = data.num_items();
  flat.responses.resize(n, k);
  flat.weights.resize(n);
  flat.levels.resize(static_cast<std::size_t>(k));
  for (int item = 0; item < k; ++item) flat.levels[static_cast<std::size_t>(item)] = data.schema.levels(item);
  flat.group_offsets.reserve(data.groups.size() + 1);
  int row = 0;
  flat.group_offsets.push_back(0);
  for (const auto& g : data.groups) {
    for (const auto& u : g.units) {
      for (int item = 0; item < k; ++item) flat.responses(row, item) = u.responses[static_cast<std::size_t>(item)];
      flat.weights(row) = u.weight;
      ++row;
    }
    flat.group_offsets.push_back(row);
  }
  return flat;
}

namespace {

std::string locate(const Group& g, const Unit& u) {
  return "group '" + g.id + "', unit '" + u.id + "'";
}

}  // namespace

TwoLevelDataset validate_dataset(TwoLevelDataset raw, const ItemSchema& schema) {
  schema.validate();
  raw.schema = schema;
  if (raw.groups.empty()) throw InputError("dataset has no groups");
  const auto k = static_cast<std::size_t>(schema.size());
  raw.missing = MissingnessSummary{};
  raw.missing.per_item.assign(k, 0);
  for (const auto& g : raw.groups) {
    if (g.units.empty()) throw InputError("group '" + g.id + "' is empty");
    for (const auto& u : g.units) {
      if (u.responses.size() != k) {
        std::ostringstream msg;
        msg << locate(g, u) << ": expected " << k << " responses, found " << u.responses.size();
        throw InputError(msg.str());
      }
      if (!(u.weight > 0.0) || !std::isfinite(u.weight)) {
        std::ostringstream msg;
        msg << locate(g, u) << ": nonpositive weight " << u.weight;
        throw InputError(msg.str());
      }
      if (u.covariates.size() != raw.covariates.size())
        throw InputError(locate(g, u) + ": covariate count does not match declared covariates");
      for (std::size_t c = 0; c < raw.covariates.size(); ++c) {
        const auto& info = raw.covariates[c];
        const double v = u.covariates[c];
        if (!std::isfinite(v)) throw InputError(locate(g, u) + ", covariate '" + info.name + "': missing or non-finite value");
        if (info.kind == CovariateKind::categorical) {
          const auto idx = static_cast<long>(v);
          if (static_cast<double>(idx) != v || idx < 0 || idx >= static_cast<long>(info.categories.size()))
            throw InputError(locate(g, u) + ", covariate '" + info.name + "': category index out of range");
        }
      }
      bool any_missing = false;
      for (std::size_t item = 0; item < k; ++item) {
        const int r = u.responses[item];
        if (r == kMissing) {
          ++raw.missing.per_item[item];
          any_missing = true;
          continue;
        }
        if (r < 0 || r >= schema.items[item].levels) {
          std::ostringstream msg;
          msg << locate(g, u) << ", item '" << schema.items[item].name << "': response " << r + 1
              << " outside 1.." << schema.items[item].levels;
          throw InputError(msg.str());
        }
      }
      if (any_missing) ++raw.missing.units_with_missing;
    }
  }
  return raw;
}

WeightMode parse_weight_mode(const std::string& text) {
  if (text == "none") return WeightMode::none;
  if (text == "per_group") return WeightMode::per_group;
  if (text == "global") return WeightMode::global;
  throw InputError("unknown weight mode '" + text + "' (expected none, per_group or global)");
}

const char* to_string(WeightMode mode) {
  switch (mode) {
    case WeightMode::none: return "none";
    case WeightMode::per_group: return "per_group";
    case WeightMode::global: return "global";
  }
  return "none";
}

TwoLevelDataset normalize_weights(TwoLevelDataset data, WeightMode mode) {
  switch (mode) {
    case WeightMode::none:
      break;
    case WeightMode::per_group:
      for (auto& g : data.groups) {
        double sum = 0.0;
        for (const auto& u : g.units) sum += u.weight;
        const double scale = static_cast<double>(g.units.size()) / sum;
        for (auto& u : g.units) u.weight *= scale;
      }
      break;
    case WeightMode::global: {
      const double scale = static_cast<double>(data.num_units()) / data.total_weight();
      for (auto& g : data.groups)
        for (auto& u : g.units) u.weight *= scale;
      break;
    }
  }
  return data;
}

}  // namespace mllc
