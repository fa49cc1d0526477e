/// @file csv.hpp
/// @brief Metrics CSV: one row per (config, seed) key, rewritten in place on re-runs.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mgno/training/train.hpp"

namespace mgno::cli {

struct CsvRecord {
  train::MetricsRow row;
  std::string key;
};

/// Column order starts with the table layout: method, scales, sharing flags, errors,
/// seconds per epoch, parameter count.
const std::vector<std::string>& csv_columns();

std::string csv_header();
std::string csv_line(const train::MetricsRow& row, const std::string& key);
CsvRecord parse_csv_line(const std::string& line);

/// RFC 4180 field splitting and quoting.
std::vector<std::string> split_csv(const std::string& line);
std::string quote_csv(const std::string& field);

/// Replace the row with the same key or append it; the file is rewritten atomically.
void upsert_csv(const std::filesystem::path& path, const train::MetricsRow& row,
                const std::string& key);

/// Overwrite the file with exactly these records.
void write_csv(const std::filesystem::path& path, const std::vector<CsvRecord>& records);

std::vector<CsvRecord> read_csv(const std::filesystem::path& path);

}  // namespace mgno::cli
