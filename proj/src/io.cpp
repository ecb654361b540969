#include "ccafuse/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ccafuse/errors.hpp"

namespace ccafuse {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    while (!field.empty() && field.front() == ' ') field.erase(field.begin());
    out.push_back(field);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
  if (text == "nan" || text == "NaN") return std::nan("");
  if (text == "inf") return HUGE_VAL;
  if (text == "-inf") return -HUGE_VAL;
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last || first == last)
    throw DataError("not a number: '" + text + "'");
  return value;
}

std::vector<std::string> numbered_ids(const std::string& prefix, Eigen::Index count,
                                      int first) {
  std::vector<std::string> ids;
  ids.reserve(static_cast<std::size_t>(count));
  for (Eigen::Index i = 0; i < count; ++i) ids.push_back(prefix + std::to_string(first + i));
  return ids;
}

LabeledMatrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  LabeledMatrix m;
  auto header = split_fields(line);
  if (header.size() < 2) throw DataError(path.string() + ": header has no sample columns");
  m.col_ids.assign(header.begin() + 1, header.end());
  const std::size_t ncol = m.col_ids.size();

  std::vector<double> cells;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto fields = split_fields(line);
    if (fields.size() != ncol + 1) {
      std::ostringstream msg;
      msg << path.string() << ":" << lineno << ": expected " << ncol + 1 << " fields, got "
          << fields.size();
      throw DataError(msg.str());
    }
    m.row_ids.push_back(fields[0]);
    for (std::size_t j = 1; j < fields.size(); ++j) {
      try {
        cells.push_back(parse_double(fields[j]));
      } catch (const DataError& e) {
        throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
  }
  const auto rows = static_cast<Eigen::Index>(m.row_ids.size());
  const auto cols = static_cast<Eigen::Index>(ncol);
  m.values.resize(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      m.values(i, j) = cells[static_cast<std::size_t>(i * cols + j)];
  return m;
}

void write_matrix_csv(const std::filesystem::path& path, const MatrixXd& values,
                      const std::vector<std::string>& row_ids,
                      const std::vector<std::string>& col_ids) {
  if (static_cast<Eigen::Index>(row_ids.size()) != values.rows() ||
      static_cast<Eigen::Index>(col_ids.size()) != values.cols())
    throw DimensionError("id lists do not match the matrix shape");
  std::ostringstream out;
  out << "feature_id";
  for (const auto& id : col_ids) out << ',' << id;
  out << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    out << row_ids[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < values.cols(); ++j) out << ',' << format_double(values(i, j));
    out << '\n';
  }
  write_text(path, out.str());
}

void write_matrix_csv(const std::filesystem::path& path, const MatrixXd& values,
                      const std::string& row_prefix, const std::vector<std::string>& col_ids) {
  write_matrix_csv(path, values, numbered_ids(row_prefix, values.rows()),
                   col_ids.empty() ? numbered_ids("s", values.cols()) : col_ids);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace ccafuse
