#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace star::harness {

/// File access failures, distinguished from numeric errors at the C
/// boundary.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Column-major numeric table from a headered CSV file.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns[0].size(); }
  int column_index(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::filesystem::path& path);

/// Split a table into the integer response column named `y` and the
/// remaining covariate columns, in file order.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXi y;
  std::vector<std::string> covariateNames;
};
Dataset split_response(const CsvTable& table);

/// Covariate-only matrix (no response column required).
Eigen::MatrixXd covariate_matrix(const CsvTable& table);

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

}  // namespace star::harness
