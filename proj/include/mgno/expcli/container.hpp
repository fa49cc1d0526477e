/// @file container.hpp
/// @brief On-disk dataset container: meta.json plus one raw little-endian f64 file per field.

#pragma once

#include <filesystem>
#include <stdexcept>

#include "mgno/pdegen/dataset.hpp"

namespace mgno::cli {

inline constexpr int kContainerFormatVersion = 1;

class ContainerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Creates the directory if needed and overwrites existing files.
void write_container(const std::filesystem::path& dir, const pde::Dataset& data);

/// Rejects unknown format versions, byte orders, and files whose length disagrees with
/// the declared shape.
pde::Dataset read_container(const std::filesystem::path& dir);

/// meta.json text of a dataset (what write_container stores).
std::string meta_json(const pde::Dataset& data);

}  // namespace mgno::cli
