/// @file report.hpp
/// @brief Result tables in units of 1e-2 with two decimals.

#pragma once

#include <string>
#include <vector>

#include "mgno/training/train.hpp"

namespace mgno::cli {

enum class TableFormat { md, csv };

TableFormat parse_table_format(const std::string& s);

/// x in units of 1e-2 with two decimals: 0.05676 -> "5.68".
std::string format_e2(double x);

/// One line per row in the given order. md and csv carry the same number strings.
std::string render_table(const std::vector<train::MetricsRow>& rows, TableFormat format);

}  // namespace mgno::cli
