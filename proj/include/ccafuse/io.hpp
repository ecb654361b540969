#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ccafuse/datamodel.hpp"

namespace ccafuse {

/// Matrix CSV: header `feature_id,<column ids>`, then one row per feature
/// led by its id. Numbers use the shortest round-trip decimal form.
struct LabeledMatrix {
  std::vector<std::string> row_ids;
  std::vector<std::string> col_ids;
  MatrixXd values;
};

std::string format_double(double x);
double parse_double(const std::string& text);

LabeledMatrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const MatrixXd& values,
                      const std::vector<std::string>& row_ids,
                      const std::vector<std::string>& col_ids);
/// Row ids prefix0.., column ids from `col_ids` or s0.. when empty.
void write_matrix_csv(const std::filesystem::path& path, const MatrixXd& values,
                      const std::string& row_prefix,
                      const std::vector<std::string>& col_ids = {});

std::vector<std::string> numbered_ids(const std::string& prefix, Eigen::Index count,
                                      int first = 0);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace ccafuse
