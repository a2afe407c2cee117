#include "qrlab/table.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qrlab/errors.hpp"

namespace qrlab {
namespace {

std::string trim(std::string_view s) {
  std::size_t lo = 0;
  std::size_t hi = s.size();
  while (lo < hi && (s[lo] == ' ' || s[lo] == '\t' || s[lo] == '\r')) ++lo;
  while (hi > lo && (s[hi - 1] == ' ' || s[hi - 1] == '\t' || s[hi - 1] == '\r')) --hi;
  return std::string(s.substr(lo, hi - lo));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::string CsvTable::to_string() const {
  std::ostringstream os;
  auto emit = [&os](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os << ',';
      os << cells[i];
    }
    os << '\n';
  };
  emit(header);
  for (const auto& row : rows) emit(row);
  return os.str();
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void write_text_atomic(const std::string& path, const std::string& contents) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::filesystem::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
    out << contents;
    out.flush();
    if (!out) throw DataError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

void write_csv_atomic(const std::string& path, const CsvTable& table) {
  write_text_atomic(path, table.to_string());
}

NumericCsv parse_numeric_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  NumericCsv out;
  if (!std::getline(in, line)) throw DataError("CSV is empty; a header row is required");
  // Skip a UTF-8 byte order mark.
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  out.header = split_fields(line);
  const std::size_t cols = out.header.size();

  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != cols) {
      throw DataError("CSV line " + std::to_string(line_no) + ": expected " +
                      std::to_string(cols) + " fields, got " + std::to_string(fields.size()));
    }
    for (const std::string& f : fields) {
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size() || !std::isfinite(v)) {
        throw DataError("CSV line " + std::to_string(line_no) + ": invalid number '" + f + "'");
      }
      values.push_back(v);
    }
    ++rows;
  }
  out.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * cols + j];
    }
  }
  return out;
}

NumericCsv read_numeric_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open CSV file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_numeric_csv(ss.str());
}

Dataset dataset_from_csv(const NumericCsv& csv) {
  const Eigen::Index cols = csv.values.cols();
  if (cols < 2) throw DataError("CSV needs at least one feature column and a label column");
  if (csv.values.rows() < 1) throw DataError("CSV has no data rows");
  Dataset data;
  data.x = csv.values.leftCols(cols - 1);
  data.y = csv.values.col(cols - 1);
  return data;
}

}  // namespace qrlab
