#include "mgno/operators/config.hpp"

#include <stdexcept>

namespace mgno::ops {

void validate(const ModelConfig& cfg) {
  auto fail = [](const std::string& what) { throw std::invalid_argument("model config: " + what); };
  if (cfg.input_features == 0) fail("input feature count must be positive");
  if (cfg.depth == 0) fail("depth must be >= 1");
  switch (cfg.kind) {
    case ModelKind::mlp:
      if (cfg.mlp_depth < 2 || cfg.mlp_width == 0) fail("MLP needs depth >= 2 and width >= 1");
      break;
    case ModelKind::gcn:
      if (cfg.width == 0 || cfg.gcn_depth == 0) fail("GCN needs width and depth >= 1");
      break;
    case ModelKind::gno:
    case ModelKind::mgno:
      if (cfg.width == 0 || cfg.kernel_width == 0) fail("width and kernel width must be positive");
      if (cfg.edge_features == 0) fail("edge feature count must be positive");
      break;
  }
  if (cfg.kind == ModelKind::mgno && cfg.scales < 2) {
    fail("MGNO needs at least 2 scales, got " + std::to_string(cfg.scales));
  }
  if (cfg.kind != ModelKind::mgno && cfg.scales != 1) {
    fail(std::string(to_string(cfg.kind)) + " is single-scale; scales must be 1");
  }
}

std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::mlp: return "mlp";
    case ModelKind::gcn: return "gcn";
    case ModelKind::gno: return "gno";
    case ModelKind::mgno: return "mgno";
  }
  return "?";
}

std::string_view to_string(CycleKind c) {
  switch (c) {
    case CycleKind::v: return "v";
    case CycleKind::f: return "f";
    case CycleKind::w: return "w";
  }
  return "?";
}

std::string_view to_string(InitKind i) {
  return i == InitKind::orthogonal ? "orthogonal" : "kaiming";
}

ModelKind parse_model_kind(std::string_view s) {
  if (s == "mlp") return ModelKind::mlp;
  if (s == "gcn") return ModelKind::gcn;
  if (s == "gno") return ModelKind::gno;
  if (s == "mgno") return ModelKind::mgno;
  throw std::invalid_argument("unknown model kind '" + std::string(s) + "'");
}

CycleKind parse_cycle_kind(std::string_view s) {
  if (s == "v" || s == "V") return CycleKind::v;
  if (s == "f" || s == "F") return CycleKind::f;
  if (s == "w" || s == "W") return CycleKind::w;
  throw std::invalid_argument("unknown cycle '" + std::string(s) + "'");
}

InitKind parse_init_kind(std::string_view s) {
  if (s == "orthogonal") return InitKind::orthogonal;
  if (s == "kaiming") return InitKind::kaiming;
  throw std::invalid_argument("unknown init '" + std::string(s) + "'");
}

std::string method_name(const ModelConfig& cfg) {
  switch (cfg.kind) {
    case ModelKind::mlp: return "MLP";
    case ModelKind::gcn: return "GCN";
    case ModelKind::gno: return "GNO";
    case ModelKind::mgno:
      switch (cfg.cycle) {
        case CycleKind::v: return "V-MGNO";
        case CycleKind::f: return "F-MGNO";
        case CycleKind::w: return "W-MGNO";
      }
  }
  return "?";
}

}  // namespace mgno::ops
