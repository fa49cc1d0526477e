/// @file config.hpp
/// @brief Model configuration shared by all operator architectures.

#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace mgno::ops {

enum class ModelKind { mlp, gcn, gno, mgno };
enum class CycleKind { v, f, w };
enum class InitKind { orthogonal, kaiming };

struct ModelConfig {
  ModelKind kind = ModelKind::mgno;
  CycleKind cycle = CycleKind::v;
  std::size_t scales = 4;
  std::size_t depth = 4;  // cycle iterations / message-passing layers
  bool intra_cycle_sharing = true;
  bool iteration_sharing = true;
  bool skip_connections = true;
  std::size_t width = 32;
  std::size_t kernel_width = 64;
  std::size_t input_features = 0;  // f_raw + dim
  std::size_t edge_features = 0;   // 2 dim + 2 f_raw
  // Baseline sizes.
  std::size_t mlp_depth = 4;
  std::size_t mlp_width = 64;
  std::size_t gcn_depth = 3;
};

/// Throws std::invalid_argument describing the first inconsistency.
void validate(const ModelConfig& cfg);

std::string_view to_string(ModelKind k);
std::string_view to_string(CycleKind c);
std::string_view to_string(InitKind i);
ModelKind parse_model_kind(std::string_view s);
CycleKind parse_cycle_kind(std::string_view s);
InitKind parse_init_kind(std::string_view s);

/// Display name used in tables, e.g. "GNO", "W-MGNO".
std::string method_name(const ModelConfig& cfg);

}  // namespace mgno::ops
