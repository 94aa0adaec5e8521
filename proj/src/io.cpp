#include "emdk/io.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "emdk/errors.hpp"

namespace emdk {

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& cell, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (trim(cell.substr(used)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw InputError("line " + std::to_string(line) + ": not a number: '" + cell + "'");
}

std::optional<std::string> optional_string(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (j[key].is_string()) return j[key].get<std::string>();
  return j[key].dump();
}

}  // namespace

std::vector<std::string> Dataset::ids() const {
  std::vector<std::string> out;
  out.reserve(items.size());
  for (const auto& it : items) out.push_back(it.id());
  return out;
}

std::vector<std::string> Dataset::labels() const {
  std::vector<std::string> out;
  out.reserve(items.size());
  for (const auto& it : items) {
    if (!it.class_label()) throw InputError("item '" + it.id() + "' has no class label");
    out.push_back(*it.class_label());
  }
  return out;
}

std::vector<std::string> Dataset::groups() const {
  std::vector<std::string> out;
  out.reserve(items.size());
  for (const auto& it : items) {
    if (!it.group_label()) throw InputError("item '" + it.id() + "' has no group label");
    out.push_back(*it.group_label());
  }
  return out;
}

Dataset Dataset::subset(const std::vector<std::size_t>& index) const {
  Dataset out;
  out.dimension = dimension;
  out.items.reserve(index.size());
  for (std::size_t i : index) out.items.push_back(items.at(i));
  return out;
}

Dataset dataset_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("items") || !j["items"].is_array()) {
    throw InputError("dataset JSON needs an \"items\" array");
  }
  Dataset ds;
  if (j.contains("dimension")) {
    ds.dimension = j["dimension"].get<std::size_t>();
  }
  std::size_t k = 0;
  for (const auto& item : j["items"]) {
    const std::string where = "item " + std::to_string(k);
    if (!item.contains("points") || !item["points"].is_array()) {
      throw InputError(where + ": missing \"points\" array");
    }
    std::vector<Point> points;
    for (const auto& p : item["points"]) {
      if (!p.is_array()) throw InputError(where + ": each point must be an array");
      points.push_back(p.get<Point>());
    }
    if (ds.dimension == 0 && !points.empty()) ds.dimension = points.front().size();
    std::vector<double> weights(points.size(), 1.0);
    if (item.contains("weights") && !item["weights"].is_null()) {
      weights = item["weights"].get<std::vector<double>>();
      if (weights.size() != points.size()) throw InputError(where + ": weights and points differ in length");
    }
    WeightedPointSet s;
    try {
      s = WeightedPointSet(points.empty() ? 0 : ds.dimension, points, weights);
    } catch (const std::exception& e) {
      throw InputError(where + ": " + e.what());
    }
    s.set_id(optional_string(item, "id").value_or("item" + std::to_string(k)));
    s.set_class_label(optional_string(item, "label"));
    s.set_group_label(optional_string(item, "group"));
    ds.items.push_back(std::move(s));
    ++k;
  }
  return ds;
}

nlohmann::json dataset_to_json(const Dataset& ds) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& s : ds.items) {
    nlohmann::json item;
    item["id"] = s.id();
    item["label"] = s.class_label() ? nlohmann::json(*s.class_label()) : nlohmann::json(nullptr);
    item["group"] = s.group_label() ? nlohmann::json(*s.group_label()) : nlohmann::json(nullptr);
    item["points"] = s.points();
    item["weights"] = s.masses();
    items.push_back(std::move(item));
  }
  return {{"dimension", ds.dimension}, {"items", std::move(items)}};
}

nlohmann::json read_json_file(const std::string& path) {
  auto in = open_in(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

void write_json_file(const nlohmann::json& j, const std::string& path) {
  auto out = open_out(path);
  out << j.dump(1) << '\n';
}

Dataset load_dataset(const std::string& path) {
  try {
    return dataset_from_json(read_json_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

void save_dataset(const Dataset& ds, const std::string& path) { write_json_file(dataset_to_json(ds), path); }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m, const std::vector<std::string>& row_ids,
                      const std::vector<std::string>& col_ids) {
  if (static_cast<Eigen::Index>(row_ids.size()) != m.rows() ||
      static_cast<Eigen::Index>(col_ids.size()) != m.cols()) {
    throw DimensionMismatch("matrix and id list sizes differ");
  }
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "id";
  for (const auto& id : col_ids) out << ',' << id;
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << row_ids[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << m(i, j);
    out << '\n';
  }
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m, const std::vector<std::string>& ids) {
  auto out = open_out(path);
  write_matrix_csv(out, m, ids, ids);
}

LabeledMatrix read_matrix_csv(std::istream& in) {
  LabeledMatrix lm;
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (lm.col_ids.empty()) {
      if (cells.size() < 2) throw InputError("line 1: header needs at least one column id");
      lm.col_ids.assign(cells.begin() + 1, cells.end());
      continue;
    }
    if (cells.size() != lm.col_ids.size() + 1) {
      throw InputError("line " + std::to_string(lineno) + ": expected " + std::to_string(lm.col_ids.size() + 1) +
                       " cells, got " + std::to_string(cells.size()));
    }
    lm.row_ids.push_back(cells[0]);
    std::vector<double> r;
    for (std::size_t c = 1; c < cells.size(); ++c) r.push_back(parse_double(cells[c], lineno));
    rows.push_back(std::move(r));
  }
  if (lm.col_ids.empty()) throw InputError("empty matrix file");
  lm.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(lm.col_ids.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      lm.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return lm;
}

LabeledMatrix read_matrix_csv(const std::string& path) {
  auto in = open_in(path);
  try {
    return read_matrix_csv(in);
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

std::vector<std::pair<std::string, std::string>> read_label_csv(const std::string& path) {
  auto in = open_in(path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != 2) {
      throw InputError(path + ": line " + std::to_string(lineno) + ": expected id,label");
    }
    if (out.empty() && lineno == 1 && cells[0] == "id" && cells[1] == "label") continue;
    out.emplace_back(cells[0], cells[1]);
  }
  return out;
}

}  // namespace emdk
