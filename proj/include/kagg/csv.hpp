#pragma once

#include "kagg/dataset.hpp"

#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace kagg {

/// One parsed RFC-4180 table: header plus string cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Parses quoted fields, embedded delimiters, doubled quotes and CRLF line ends.
/// Throws InvalidArgument on ragged rows or an unterminated quote.
CsvTable parse_csv(std::istream& in, char delimiter = ',');
CsvTable read_csv_file(const std::filesystem::path& path, char delimiter = ',');

/// Quotes a field when it contains the delimiter, a quote or a line break.
std::string csv_escape(const std::string& field, char delimiter = ',');

struct CsvLoadOptions {
  char delimiter = ',';
  /// Explicit string -> number maps for categorical columns that should be kept.
  std::map<std::string, std::map<std::string, double>> categorical;
};

struct CsvLoadResult {
  Dataset data;
  std::vector<std::string> feature_names;
  std::size_t dropped_rows = 0;                ///< rows with a missing value in a used column
  std::vector<std::string> excluded_columns;   ///< non-numeric columns left out
};

/// Builds a Dataset from a CSV file with a header row.
///
/// With `feature_columns` empty every other column is a candidate feature, and columns
/// holding non-numeric text are excluded unless mapped in `options.categorical`.
/// Named feature columns must parse. Empty, NA, NaN and ? cells count as missing and
/// drop the row. Throws InvalidArgument naming the row and column of a bad cell.
CsvLoadResult load_csv(const std::filesystem::path& path, const std::string& target_column,
                       const std::vector<std::string>& feature_columns = {},
                       const CsvLoadOptions& options = {});
CsvLoadResult load_csv(std::istream& in, const std::string& target_column,
                       const std::vector<std::string>& feature_columns = {},
                       const CsvLoadOptions& options = {});

/// Header x1..xd,y followed by one row per observation (17 significant digits).
void write_dataset_csv(std::ostream& out, const Dataset& data, const Vector* signal = nullptr);

}  // namespace kagg
