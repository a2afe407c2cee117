#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "qrlab/erm.hpp"

namespace qrlab {

/// A CSV table held as text cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string to_string() const;
};

/// Shortest round-trip representation ("nan" / "inf" for non-finite values).
std::string format_number(double value);

/// Writes to a sibling temp file and renames it over `path`.
void write_text_atomic(const std::string& path, const std::string& contents);
void write_csv_atomic(const std::string& path, const CsvTable& table);

/// UTF-8 CSV with a header row, '.' decimal point and no thousands separators.
struct NumericCsv {
  std::vector<std::string> header;
  Eigen::MatrixXd values;
};

/// Throws DataError on malformed input.
NumericCsv parse_numeric_csv(const std::string& text);
NumericCsv read_numeric_csv(const std::string& path);

/// Last column is the label, all other columns are features.
Dataset dataset_from_csv(const NumericCsv& csv);

}  // namespace qrlab
