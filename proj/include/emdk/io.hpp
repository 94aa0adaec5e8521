#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "emdk/multiset.hpp"

namespace emdk {

struct Dataset {
  std::size_t dimension = 0;
  std::vector<WeightedPointSet> items;

  std::vector<std::string> ids() const;
  // Throws InputError when an item has no class label.
  std::vector<std::string> labels() const;
  // Throws InputError when an item has no group label.
  std::vector<std::string> groups() const;
  Dataset subset(const std::vector<std::size_t>& index) const;
};

// {"dimension": d, "items": [{"id", "label", "group", "points", "weights"}]}
// Missing weights mean unit mass. Missing ids become "item<k>".
Dataset dataset_from_json(const nlohmann::json& j);
nlohmann::json dataset_to_json(const Dataset& ds);
Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& ds, const std::string& path);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const nlohmann::json& j, const std::string& path);

// CSV with a header row "id,<id1>,<id2>,..." and one "<id>,v,v,..." row each.
struct LabeledMatrix {
  std::vector<std::string> row_ids;
  std::vector<std::string> col_ids;
  Eigen::MatrixXd values;
};

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m, const std::vector<std::string>& row_ids,
                      const std::vector<std::string>& col_ids);
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& ids);
LabeledMatrix read_matrix_csv(std::istream& in);
LabeledMatrix read_matrix_csv(const std::string& path);

// "id,label" rows; a first row "id,label" is treated as a header.
std::vector<std::pair<std::string, std::string>> read_label_csv(const std::string& path);

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace emdk
