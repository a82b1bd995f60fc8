#include "mllc/csv_io.hpp"

#include "mllc/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace mllc {

using nlohmann::json;

DatasetSchema parse_schema(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("schema is not valid JSON: ") + e.what());
  }
  DatasetSchema schema;
  try {
    for (const auto& item : doc.at("items")) schema.items.items.push_back({item.at("name").get<std::string>(), item.at("levels").get<int>()});
    if (doc.contains("covariates")) {
      for (const auto& cov : doc.at("covariates")) {
        CovariateInfo info;
        info.name = cov.at("name").get<std::string>();
        const auto type = cov.value("type", std::string("categorical"));
        if (type == "continuous") {
          info.kind = CovariateKind::continuous;
        } else if (type == "categorical") {
          info.categories = cov.at("categories").get<std::vector<std::string>>();
          if (info.categories.empty()) throw InputError("categorical covariate '" + info.name + "' declares no categories");
        } else {
          throw InputError("covariate '" + info.name + "' has unknown type '" + type + "'");
        }
        schema.covariates.push_back(std::move(info));
      }
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed schema: ") + e.what());
  }
  schema.items.validate();
  return schema;
}

std::string schema_to_json(const TwoLevelDataset& data) {
  nlohmann::ordered_json doc;
  doc["items"] = nlohmann::ordered_json::array();
  for (const auto& item : data.schema.items) doc["items"].push_back({{"name", item.name}, {"levels", item.levels}});
  doc["covariates"] = nlohmann::ordered_json::array();
  for (const auto& cov : data.covariates) {
    nlohmann::ordered_json c;
    c["name"] = cov.name;
    c["type"] = cov.kind == CovariateKind::continuous ? "continuous" : "categorical";
    if (cov.kind == CovariateKind::categorical) c["categories"] = cov.categories;
    doc["covariates"].push_back(c);
  }
  return doc.dump(2) + "\n";
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line, int line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  if (quoted) throw InputError("line " + std::to_string(line_no) + ": unterminated quote");
  fields.push_back(cur);
  return fields;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && std::isfinite(out);
}

bool parse_int(const std::string& s, int& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace

LoadedData parse_csv(std::istream& in, const DatasetSchema& schema) {
  std::string line;
  int line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_csv_line(line, line_no);
      break;
    }
  }
  if (header.empty()) throw InputError("no data: input file is empty");
  std::map<std::string, int> column;
  for (std::size_t c = 0; c < header.size(); ++c) column[trim(header[c])] = static_cast<int>(c);

  std::vector<std::string> missing;
  auto need = [&](const std::string& name) {
    const auto it = column.find(name);
    if (it == column.end()) {
      missing.push_back(name);
      return -1;
    }
    return it->second;
  };
  const int group_col = need("group_id");
  const int unit_col = need("unit_id");
  const int weight_col = need("weight");
  std::vector<int> item_cols, cov_cols;
  for (const auto& item : schema.items.items) item_cols.push_back(need(item.name));
  for (const auto& cov : schema.covariates) cov_cols.push_back(need(cov.name));
  if (!missing.empty()) {
    std::string msg = "CSV is missing schema columns:";
    for (const auto& m : missing) msg += " " + m;
    throw InputError(msg);
  }

  TwoLevelDataset data;
  data.covariates = schema.covariates;
  std::map<std::string, std::size_t> group_index;
  int rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line, line_no);
    const auto where = "line " + std::to_string(line_no) + ": ";
    if (fields.size() != header.size()) {
      std::ostringstream msg;
      msg << where << "expected " << header.size() << " fields, found " << fields.size();
      throw InputError(msg.str());
    }
    Unit unit;
    unit.id = trim(fields[static_cast<std::size_t>(unit_col)]);
    const auto gid = trim(fields[static_cast<std::size_t>(group_col)]);
    if (gid.empty()) throw InputError(where + "empty group_id");
    if (!parse_double(trim(fields[static_cast<std::size_t>(weight_col)]), unit.weight))
      throw InputError(where + "weight '" + fields[static_cast<std::size_t>(weight_col)] + "' is not a number");
    if (!(unit.weight > 0.0)) throw InputError(where + "nonpositive weight " + trim(fields[static_cast<std::size_t>(weight_col)]));
    for (std::size_t k = 0; k < item_cols.size(); ++k) {
      const auto cell = trim(fields[static_cast<std::size_t>(item_cols[k])]);
      if (cell.empty()) {
        unit.responses.push_back(kMissing);
        continue;
      }
      int level = 0;
      const auto& item = schema.items.items[k];
      if (!parse_int(cell, level)) throw InputError(where + "item '" + item.name + "' value '" + cell + "' is not an integer");
      if (level < 1 || level > item.levels)
        throw InputError(where + "item '" + item.name + "' response " + cell + " outside 1.." + std::to_string(item.levels));
      unit.responses.push_back(level - 1);
    }
    for (std::size_t c = 0; c < cov_cols.size(); ++c) {
      const auto cell = trim(fields[static_cast<std::size_t>(cov_cols[c])]);
      const auto& info = schema.covariates[c];
      if (cell.empty()) throw InputError(where + "covariate '" + info.name + "' is missing");
      if (info.kind == CovariateKind::continuous) {
        double v = 0.0;
        if (!parse_double(cell, v)) throw InputError(where + "covariate '" + info.name + "' value '" + cell + "' is not a number");
        unit.covariates.push_back(v);
      } else {
        const auto it = std::find(info.categories.begin(), info.categories.end(), cell);
        if (it == info.categories.end()) throw InputError(where + "covariate '" + info.name + "' has undeclared category '" + cell + "'");
        unit.covariates.push_back(static_cast<double>(it - info.categories.begin()));
      }
    }
    auto [it, inserted] = group_index.emplace(gid, data.groups.size());
    if (inserted) data.groups.push_back({gid, {}});
    data.groups[it->second].units.push_back(std::move(unit));
    ++rows;
  }
  if (rows == 0) throw InputError("no data: CSV has a header but no rows");

  LoadedData out;
  out.data = validate_dataset(std::move(data), schema.items);
  out.summary.rows = rows;
  out.summary.columns = static_cast<int>(header.size());
  out.summary.groups = out.data.num_groups();
  out.summary.units = out.data.num_units();
  out.summary.missing = out.data.missing;
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

LoadedData load_csv(const std::string& csv_path, const std::string& schema_path) {
  const auto schema = parse_schema(read_file(schema_path));
  std::ifstream in(csv_path);
  if (!in) throw InputError("cannot read '" + csv_path + "'");
  return parse_csv(in, schema);
}

void write_csv(const TwoLevelDataset& data, std::ostream& out) {
  out << "group_id,unit_id,weight";
  for (const auto& item : data.schema.items) out << ',' << csv_escape(item.name);
  for (const auto& cov : data.covariates) out << ',' << csv_escape(cov.name);
  out << '\n';
  for (const auto& g : data.groups) {
    for (const auto& u : g.units) {
      out << csv_escape(g.id) << ',' << csv_escape(u.id) << ',' << std::setprecision(17) << u.weight;
      for (const int r : u.responses) {
        out << ',';
        if (r != kMissing) out << r + 1;
      }
      for (std::size_t c = 0; c < data.covariates.size(); ++c) {
        out << ',';
        const auto& info = data.covariates[c];
        if (info.kind == CovariateKind::continuous) {
          out << std::setprecision(17) << u.covariates[c];
        } else {
          out << csv_escape(info.categories[static_cast<std::size_t>(u.covariates[c])]);
        }
      }
      out << '\n';
    }
  }
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const auto tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + tmp + "'");
    out << content;
    if (!out) throw InputError("failed writing '" + tmp + "'");
  }
  std::filesystem::rename(tmp, target);
}

}  // namespace mllc
