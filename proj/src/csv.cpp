#include "kagg/csv.hpp"

#include "kagg/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

namespace kagg {

namespace {

bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan" || cell == "?";
}

std::optional<double> parse_number(const std::string& cell) {
  std::size_t b = 0, e = cell.size();
  while (b < e && (cell[b] == ' ' || cell[b] == '\t')) ++b;
  while (e > b && (cell[e - 1] == ' ' || cell[e - 1] == '\t')) --e;
  if (b == e) return std::nullopt;
  const char* first = cell.data() + b;
  if (*first == '+') ++first;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(first, cell.data() + e, v);
  if (ec != std::errc() || ptr != cell.data() + e || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

}  // namespace

CsvTable parse_csv(std::istream& in, char delimiter) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  bool any = false;
  char c = 0;
  auto end_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    // A completely empty line is skipped rather than read as one empty field.
    if (!(record.size() == 1 && record[0].empty() && !field_started)) records.push_back(std::move(record));
    record.clear();
    field_started = false;
  };
  while (in.get(c)) {
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      in_quotes = true;
      field_started = true;
    } else if (c == delimiter) {
      record.push_back(std::move(field));
      field.clear();
      field_started = true;
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get(c);
      end_record();
    } else if (c == '\n') {
      end_record();
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (in_quotes) throw InvalidArgument("csv: unterminated quoted field");
  if (any && (field_started || !field.empty() || !record.empty())) end_record();
  if (records.empty()) throw InvalidArgument("csv: missing header row");

  CsvTable table;
  table.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      throw InvalidArgument("csv: row " + std::to_string(r + 1) + " has " +
                            std::to_string(records[r].size()) + " fields, header has " +
                            std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

CsvTable read_csv_file(const std::filesystem::path& path, char delimiter) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("csv: cannot open " + path.string());
  return parse_csv(in, delimiter);
}

std::string csv_escape(const std::string& field, char delimiter) {
  if (field.find_first_of(std::string{delimiter, '"', '\n', '\r'}) == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

CsvLoadResult load_csv(const std::filesystem::path& path, const std::string& target_column,
                       const std::vector<std::string>& feature_columns,
                       const CsvLoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("csv: cannot open " + path.string());
  return load_csv(in, target_column, feature_columns, options);
}

CsvLoadResult load_csv(std::istream& in, const std::string& target_column,
                       const std::vector<std::string>& feature_columns,
                       const CsvLoadOptions& options) {
  const CsvTable table = parse_csv(in, options.delimiter);
  auto column_index = [&](const std::string& name) {
    auto it = std::find(table.header.begin(), table.header.end(), name);
    if (it == table.header.end()) throw InvalidArgument("csv: missing column '" + name + "'");
    return static_cast<std::size_t>(it - table.header.begin());
  };
  const std::size_t target = column_index(target_column);

  // Cell -> number through the categorical map when one exists for the column.
  auto convert = [&](std::size_t col, const std::string& cell) -> std::optional<double> {
    auto map = options.categorical.find(table.header[col]);
    if (map != options.categorical.end()) {
      auto hit = map->second.find(cell);
      if (hit != map->second.end()) return hit->second;
      return std::nullopt;
    }
    return parse_number(cell);
  };
  auto bad_cell = [&](std::size_t row, std::size_t col) {
    return InvalidArgument("csv: cannot parse '" + table.rows[row][col] + "' at row " +
                           std::to_string(row + 2) + ", column " + std::to_string(col + 1) +
                           " ('" + table.header[col] + "')");
  };

  CsvLoadResult result;
  std::vector<std::size_t> features;
  if (feature_columns.empty()) {
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      if (c == target) continue;
      bool numeric = true;
      for (const auto& row : table.rows) {
        if (!is_missing(row[c]) && !convert(c, row[c])) {
          numeric = false;
          break;
        }
      }
      if (numeric) {
        features.push_back(c);
      } else {
        result.excluded_columns.push_back(table.header[c]);
      }
    }
  } else {
    for (const auto& name : feature_columns) features.push_back(column_index(name));
  }
  if (features.empty()) throw InvalidArgument("csv: no usable feature columns");

  std::vector<std::vector<double>> xs;
  std::vector<double> ys;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    bool missing = is_missing(row[target]);
    for (std::size_t c : features) missing = missing || is_missing(row[c]);
    if (missing) {
      ++result.dropped_rows;
      continue;
    }
    auto y = convert(target, row[target]);
    if (!y) throw bad_cell(r, target);
    std::vector<double> x;
    x.reserve(features.size());
    for (std::size_t c : features) {
      auto v = convert(c, row[c]);
      if (!v) throw bad_cell(r, c);
      x.push_back(*v);
    }
    xs.push_back(std::move(x));
    ys.push_back(*y);
  }
  if (xs.empty()) throw InvalidArgument("csv: no complete rows");

  result.data.features.resize(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(features.size()));
  result.data.responses.resize(static_cast<Eigen::Index>(ys.size()));
  for (std::size_t r = 0; r < xs.size(); ++r) {
    for (std::size_t c = 0; c < features.size(); ++c) {
      result.data.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = xs[r][c];
    }
    result.data.responses[static_cast<Eigen::Index>(r)] = ys[r];
  }
  for (std::size_t c : features) result.feature_names.push_back(table.header[c]);
  return result;
}

void write_dataset_csv(std::ostream& out, const Dataset& data, const Vector* signal) {
  for (std::size_t j = 0; j < data.dims(); ++j) out << 'x' << (j + 1) << ',';
  out << 'y';
  if (signal) out << ",signal";
  out << '\n';
  for (Eigen::Index i = 0; i < data.features.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.features.cols(); ++j) out << format_double(data.features(i, j)) << ',';
    out << format_double(data.responses[i]);
    if (signal) out << ',' << format_double((*signal)[i]);
    out << '\n';
  }
}

}  // namespace kagg
