#pragma once

#include "kagg/harness.hpp"

#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

namespace kagg {

enum class OutputFormat { Csv, Json, Markdown };
std::string_view format_name(OutputFormat format);
/// csv, json, markdown (or md). Throws InvalidConfig otherwise.
OutputFormat parse_format(std::string_view name);

/// %.6g rendering used for every summary statistic.
std::string format_summary(double value);

/// Rows: one per column. Header: column,block,metric,mean,sd,se,rep_<i>...
/// Summaries use 6 significant digits, per-replication values 17.
void write_results_csv(std::ostream& out, const ResultTable& table);
/// Inverse of write_results_csv. Checks that the printed summaries match the values.
ResultTable parse_results_csv(std::istream& in);

/// Summaries plus the raw per-replication arrays. Timings only when table.include_timings.
void write_results_json(std::ostream& out, const ResultTable& table);

/// One row per table: learners block, then schemes block, "mean (sd)" cells.
/// Every table must have the same columns.
void write_results_markdown(std::ostream& out, std::span<const ResultTable> tables);

/// Validates the table, renders it in memory, then writes `path` ("-" for stdout).
/// Throws InvalidArgument for a table with no replications (nothing is written) and
/// std::runtime_error for an unwritable path.
void emit_results(const ResultTable& table, OutputFormat format, const std::filesystem::path& path);
void emit_results(const ResultTable& table, OutputFormat format, std::ostream& out);

void write_timings(std::ostream& out, std::span<const OptimizerTiming> timings, OutputFormat format);

}  // namespace kagg
