/// @file run_config.hpp
/// @brief Line-oriented `key = value` run descriptions and ablation grid specs.

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "mgno/operators/config.hpp"
#include "mgno/training/train.hpp"

namespace mgno::cli {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  std::string data;
  std::string out = "results.csv";
  ops::ModelConfig model;
  train::TrainConfig train;
};

/// Keys: data, out, model, cycle, scales, depth, intra_share, iter_share, skip, width,
/// kwidth, mlp_depth, mlp_width, gcn_depth, lr, epochs, beta1, beta2, eps, init, gain,
/// seed, batch, eval_every. Unknown keys and malformed values throw ConfigError.
void set_run_key(RunConfig& cfg, const std::string& key, const std::string& value);

/// Parse `key = value` lines; `#` starts a comment. Starts from the defaults in `base`.
RunConfig parse_run_config(const std::string& text, RunConfig base = {});

RunConfig load_run_config(const std::string& path, RunConfig base = {});

std::string format_run_config(const RunConfig& cfg);

/// Parse 1/0, true/false, on/off, yes/no.
bool parse_bool(const std::string& s);

struct GridSpec {
  std::vector<ops::ModelConfig> cells;
  /// Train settings shared by every cell (seed is set per run).
  train::TrainConfig train;
};

/// Grid spec lines:
///   set  key=value ...   train settings and model defaults for later cells
///   cell key=value ...   one cell; comma lists expand to the cartesian product
/// Baseline cells default to one scale.
GridSpec parse_grid_spec(const std::string& text);

GridSpec load_grid_spec(const std::string& path);

}  // namespace mgno::cli
