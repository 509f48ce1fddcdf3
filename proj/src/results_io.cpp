#include "kagg/results_io.hpp"

#include "kagg/csv.hpp"
#include "kagg/errors.hpp"
#include "kagg/metrics.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace kagg {

namespace {

std::string format_full(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

double parse_number(const std::string& cell, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument(where + ": '" + cell + "' is not a number");
  }
}

ColumnBlock parse_block(const std::string& name) {
  if (name == "learners") return ColumnBlock::Learner;
  if (name == "schemes") return ColumnBlock::Scheme;
  throw InvalidArgument("unknown block '" + name + "'");
}

void require_rows(const ResultTable& table) {
  if (table.replications.empty()) throw InvalidArgument("result table has no replications");
  table.check();
}

}  // namespace

std::string_view format_name(OutputFormat format) {
  switch (format) {
    case OutputFormat::Csv: return "csv";
    case OutputFormat::Json: return "json";
    case OutputFormat::Markdown: return "markdown";
  }
  return "csv";
}

OutputFormat parse_format(std::string_view name) {
  if (name == "csv") return OutputFormat::Csv;
  if (name == "json") return OutputFormat::Json;
  if (name == "markdown" || name == "md") return OutputFormat::Markdown;
  throw InvalidConfig("unknown output format '" + std::string(name) + "'");
}

std::string format_summary(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  return buf;
}

void write_results_csv(std::ostream& out, const ResultTable& table) {
  out << "source,column,block,metric,mean,sd,se";
  for (std::size_t r : table.replications) out << ",rep_" << r;
  out << "\n";
  for (const auto& c : table.columns) {
    out << csv_escape(table.source) << ',' << csv_escape(c.name) << ',' << block_name(c.block) << ','
        << csv_escape(table.metric) << ',' << format_summary(c.mean()) << ',' << format_summary(c.sd()) << ','
        << format_summary(c.se());
    for (double v : c.values) out << ',' << format_full(v);
    out << "\n";
  }
}

ResultTable parse_results_csv(std::istream& in) {
  const CsvTable csv = parse_csv(in);
  const std::vector<std::string> fixed{"source", "column", "block", "metric", "mean", "sd", "se"};
  if (csv.header.size() < fixed.size() || !std::equal(fixed.begin(), fixed.end(), csv.header.begin())) {
    throw InvalidArgument("not a results csv: unexpected header");
  }
  ResultTable table;
  for (std::size_t k = fixed.size(); k < csv.header.size(); ++k) {
    const std::string& h = csv.header[k];
    if (h.rfind("rep_", 0) != 0) throw InvalidArgument("unexpected header cell '" + h + "'");
    table.replications.push_back(static_cast<std::size_t>(parse_number(h.substr(4), "header")));
  }
  for (std::size_t i = 0; i < csv.rows.size(); ++i) {
    const auto& row = csv.rows[i];
    const std::string where = "results row " + std::to_string(i + 2);
    if (i == 0) {
      table.source = row[0];
      table.metric = row[3];
    } else if (row[0] != table.source || row[3] != table.metric) {
      throw InvalidArgument(where + ": source or metric differs from the first row");
    }
    ResultColumn c;
    c.name = row[1];
    c.block = parse_block(row[2]);
    for (std::size_t k = fixed.size(); k < row.size(); ++k) c.values.push_back(parse_number(row[k], where));
    if (format_summary(c.mean()) != row[4] || format_summary(c.sd()) != row[5] || format_summary(c.se()) != row[6]) {
      throw InvalidArgument(where + ": summaries do not match the stored values");
    }
    if (c.block == ColumnBlock::Scheme) c.bandwidths.assign(c.values.size(), 0.0);
    table.columns.push_back(std::move(c));
  }
  table.check();
  return table;
}

void write_results_json(std::ostream& out, const ResultTable& table) {
  using nlohmann::ordered_json;
  ordered_json root;
  root["source"] = table.source;
  root["metric"] = table.metric;
  root["replications"] = table.replications;
  root["failed"] = table.failed;
  ordered_json cols = ordered_json::array();
  for (const auto& c : table.columns) {
    ordered_json j;
    j["name"] = c.name;
    j["block"] = block_name(c.block);
    j["mean"] = std::stod(format_summary(c.mean()));
    j["sd"] = std::stod(format_summary(c.sd()));
    j["se"] = std::stod(format_summary(c.se()));
    j["values"] = c.values;
    if (c.block == ColumnBlock::Scheme) j["bandwidths"] = c.bandwidths;
    if (!c.alphas.empty()) j["alphas"] = c.alphas;
    cols.push_back(std::move(j));
  }
  root["columns"] = std::move(cols);
  if (table.include_timings) {
    ordered_json t;
    t["replication_seconds"] = table.replication_seconds;
    ordered_json opt = ordered_json::object();
    for (const auto& c : table.columns) {
      if (c.block == ColumnBlock::Scheme) opt[c.name] = c.optimizer_seconds;
    }
    t["optimizer_seconds"] = std::move(opt);
    root["timings"] = std::move(t);
  }
  out << root.dump(2) << "\n";
}

void write_results_markdown(std::ostream& out, std::span<const ResultTable> tables) {
  if (tables.empty()) throw InvalidArgument("no tables to render");
  const ResultTable& first = tables.front();
  for (const auto& t : tables) {
    require_rows(t);
    bool same = t.columns.size() == first.columns.size() && t.metric == first.metric;
    for (std::size_t c = 0; same && c < t.columns.size(); ++c) {
      same = t.columns[c].name == first.columns[c].name && t.columns[c].block == first.columns[c].block;
    }
    if (!same) throw InvalidArgument("markdown tables must share their columns and metric");
  }

  std::size_t learners = 0;
  for (const auto& c : first.columns) learners += c.block == ColumnBlock::Learner ? 1 : 0;
  const std::size_t schemes = first.columns.size() - learners;

  out << "Mean test " << first.metric << " (sample sd). Learners: " << learners
      << " columns; aggregation schemes: " << schemes << " columns.\n\n";
  out << "| source |";
  for (std::size_t c = 0; c < first.columns.size(); ++c) {
    if (c == learners) out << " |";
    out << ' ' << first.columns[c].name << " |";
  }
  out << "\n|:--|";
  for (std::size_t c = 0; c < first.columns.size(); ++c) {
    if (c == learners) out << ":-:|";
    out << "--:|";
  }
  out << "\n";
  for (const auto& t : tables) {
    out << "| " << t.source << " (R=" << t.replications.size() << ") |";
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      if (c == learners) out << " |";
      const auto& col = t.columns[c];
      out << ' ' << format_summary(col.mean()) << " (" << format_summary(col.sd()) << ") |";
    }
    out << "\n";
  }
  for (const auto& t : tables) {
    if (!t.include_timings) continue;
    out << "\nMean tuning seconds, " << t.source << ":";
    for (const auto& c : t.columns) {
      if (c.block == ColumnBlock::Scheme) out << ' ' << c.name << '=' << format_summary(mean(c.optimizer_seconds));
    }
    out << "; mean replication seconds=" << format_summary(mean(t.replication_seconds)) << "\n";
  }
}

void emit_results(const ResultTable& table, OutputFormat format, std::ostream& out) {
  require_rows(table);
  std::ostringstream text;
  switch (format) {
    case OutputFormat::Csv: write_results_csv(text, table); break;
    case OutputFormat::Json: write_results_json(text, table); break;
    case OutputFormat::Markdown: write_results_markdown(text, std::span<const ResultTable>(&table, 1)); break;
  }
  out << text.str();
}

void emit_results(const ResultTable& table, OutputFormat format, const std::filesystem::path& path) {
  require_rows(table);
  std::ostringstream text;
  emit_results(table, format, text);
  if (path == "-") {
    std::cout << text.str();
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open " + path.string() + " for writing");
  file << text.str();
  file.flush();
  if (!file) throw std::runtime_error("failed writing " + path.string());
}

void write_timings(std::ostream& out, std::span<const OptimizerTiming> timings, OutputFormat format) {
  if (format == OutputFormat::Json) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& t : timings) {
      nlohmann::ordered_json j;
      j["replication"] = t.replication;
      j["gd_seconds"] = t.gd_seconds;
      j["grid_seconds"] = t.grid_seconds;
      j["gd_h"] = t.gd_h;
      j["grid_h"] = t.grid_h;
      j["gd_cv_error"] = t.gd_cv_error;
      j["grid_cv_error"] = t.grid_cv_error;
      j["gd_iterations"] = t.gd_iterations;
      j["grid_points"] = t.grid_points;
      arr.push_back(std::move(j));
    }
    out << arr.dump(2) << "\n";
    return;
  }
  if (format == OutputFormat::Csv) {
    out << "replication,gd_seconds,grid_seconds,gd_h,grid_h,gd_cv_error,grid_cv_error,gd_iterations,grid_points\n";
    for (const auto& t : timings) {
      out << t.replication << ',' << format_full(t.gd_seconds) << ',' << format_full(t.grid_seconds) << ','
          << format_full(t.gd_h) << ',' << format_full(t.grid_h) << ',' << format_full(t.gd_cv_error) << ','
          << format_full(t.grid_cv_error) << ',' << t.gd_iterations << ',' << t.grid_points << "\n";
    }
    return;
  }
  out << "| replication | GD s | grid s | GD h | grid h | GD cv | grid cv | GD iters |\n"
      << "|--:|--:|--:|--:|--:|--:|--:|--:|\n";
  std::vector<double> gd, grid;
  for (const auto& t : timings) {
    out << "| " << t.replication << " | " << format_summary(t.gd_seconds) << " | " << format_summary(t.grid_seconds)
        << " | " << format_summary(t.gd_h) << " | " << format_summary(t.grid_h) << " | "
        << format_summary(t.gd_cv_error) << " | " << format_summary(t.grid_cv_error) << " | " << t.gd_iterations
        << " |\n";
    gd.push_back(t.gd_seconds);
    grid.push_back(t.grid_seconds);
  }
  if (!timings.empty()) {
    out << "\nMedian seconds: GD " << format_summary(median(gd)) << ", grid " << format_summary(median(grid)) << "\n";
  }
}

}  // namespace kagg
