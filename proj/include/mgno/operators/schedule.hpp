/// @file schedule.hpp
/// @brief Down/In/Up action sequences for V-, F- and W-cycles.
///
/// Scales are 1-based here to match how cycles are usually drawn: scale 1 is
/// the finest. Down(l) moves state from l to l+1, Up(l) from l+1 back to l,
/// In(l) stays on l. Every cycle is built from the block
///
///     Down(l), <sub-cycle at l+1>, Up(l), In(l)
///
/// with In(L) as the sub-cycle at the coarsest scale. V uses the block once.
/// W repeats the block twice on every non-finest level. F runs an F sub-cycle
/// then, on non-finest levels, one extra block with a V sub-cycle.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mgno/operators/config.hpp"

namespace mgno::ops {

enum class ActionRole { down, in, up };

struct Action {
  ActionRole role;
  std::size_t scale;  // 1-based
  /// Occurrence index of (role, scale) within one cycle iteration.
  std::size_t visit = 0;

  bool operator==(const Action&) const = default;
};

struct CycleSchedule {
  CycleKind cycle;
  std::size_t scales;
  std::vector<Action> actions;

  /// Scale visited after each transition, starting at 1 (In actions add nothing).
  std::vector<std::size_t> level_trace() const;
  std::string str() const;
};

/// Throws std::invalid_argument for fewer than two scales.
CycleSchedule generate_schedule(CycleKind cycle, std::size_t scales);

std::string_view to_string(ActionRole r);

}  // namespace mgno::ops
