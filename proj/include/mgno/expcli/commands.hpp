/// @file commands.hpp
/// @brief The mgno command line: gen, train, ablate, report, selftest, gradcheck.
///
/// Exit codes: 0 success, 1 validation error (bad flags, configs, or containers),
/// 2 runtime or numerical failure.

#pragma once

#include <iosfwd>
#include <string>

#include "mgno/pdegen/dataset.hpp"

namespace mgno::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

int run(int argc, char** argv);

/// Short text identity of a dataset used in CSV keys.
std::string dataset_tag(const pde::DatasetMeta& meta);

}  // namespace mgno::cli
