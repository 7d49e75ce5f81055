#include "star/harness/csv.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace star::harness {

namespace {
std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    while (!field.empty() && field.front() == ' ') field.erase(field.begin());
    out.push_back(field);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}
}  // namespace

int CsvTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open CSV file: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty CSV file: " + path.string());
  CsvTable table;
  table.header = split_line(line);
  if (table.header.empty()) throw std::runtime_error("CSV header row is empty");
  table.columns.resize(table.header.size());

  std::size_t lineNo = 1;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty()) continue;
    const auto fields = split_line(line);
    if (fields.size() != table.header.size())
      throw std::runtime_error("CSV row " + std::to_string(lineNo) + " has " +
                               std::to_string(fields.size()) + " fields, expected " +
                               std::to_string(table.header.size()));
    for (std::size_t i = 0; i < fields.size(); ++i) {
      try {
        table.columns[i].push_back(std::stod(fields[i]));
      } catch (const std::exception&) {
        throw std::runtime_error("CSV row " + std::to_string(lineNo) + ", column '" +
                                 table.header[i] + "': not a number: '" + fields[i] + "'");
      }
    }
  }
  if (table.rows() == 0) throw std::runtime_error("CSV has no data rows: " + path.string());
  return table;
}

Dataset split_response(const CsvTable& table) {
  const int yi = table.column_index("y");
  if (yi < 0) throw std::runtime_error("CSV needs a response column named 'y'");
  Dataset d;
  const auto n = static_cast<Eigen::Index>(table.rows());
  d.y.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double v = table.columns[static_cast<std::size_t>(yi)][static_cast<std::size_t>(r)];
    if (std::abs(v - std::round(v)) > 1e-9)
      throw std::runtime_error("response column 'y' must be integer valued");
    d.y[r] = static_cast<int>(std::lround(v));
  }
  const auto p = static_cast<Eigen::Index>(table.header.size()) - 1;
  d.X.resize(n, p);
  Eigen::Index c = 0;
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (static_cast<int>(j) == yi) continue;
    d.covariateNames.push_back(table.header[j]);
    for (Eigen::Index r = 0; r < n; ++r)
      d.X(r, c) = table.columns[j][static_cast<std::size_t>(r)];
    ++c;
  }
  return d;
}

Eigen::MatrixXd covariate_matrix(const CsvTable& table) {
  const auto n = static_cast<Eigen::Index>(table.rows());
  const auto p = static_cast<Eigen::Index>(table.header.size());
  Eigen::MatrixXd x(n, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index r = 0; r < n; ++r)
      x(r, j) = table.columns[static_cast<std::size_t>(j)][static_cast<std::size_t>(r)];
  return x;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write CSV file: " + path.string());
  for (std::size_t i = 0; i < header.size(); ++i)
    out << header[i] << (i + 1 < header.size() ? ',' : '\n');
  out.precision(12);
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw std::runtime_error("write_csv: row width does not match header");
    for (std::size_t i = 0; i < row.size(); ++i)
      out << row[i] << (i + 1 < row.size() ? ',' : '\n');
  }
}

}  // namespace star::harness
