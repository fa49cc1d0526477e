#include "mgno/operators/schedule.hpp"

#include <map>
#include <sstream>
#include <stdexcept>

namespace mgno::ops {

namespace {

class Builder {
 public:
  explicit Builder(std::size_t scales) : scales_(scales) {}

  void v_cycle(std::size_t l) {
    if (l == scales_) return push(ActionRole::in, l);
    block(l, [this](std::size_t next) { v_cycle(next); });
  }

  void w_cycle(std::size_t l) {
    if (l == scales_) return push(ActionRole::in, l);
    const int repeats = l > 1 ? 2 : 1;
    for (int r = 0; r < repeats; ++r) block(l, [this](std::size_t next) { w_cycle(next); });
  }

  void f_cycle(std::size_t l) {
    if (l == scales_) return push(ActionRole::in, l);
    block(l, [this](std::size_t next) { f_cycle(next); });
    if (l > 1) block(l, [this](std::size_t next) { v_cycle(next); });
  }

  std::vector<Action> take() { return std::move(actions_); }

 private:
  template <typename Sub>
  void block(std::size_t l, Sub&& sub) {
    push(ActionRole::down, l);
    sub(l + 1);
    push(ActionRole::up, l);
    push(ActionRole::in, l);
  }

  void push(ActionRole role, std::size_t scale) {
    const std::size_t visit = visits_[{role, scale}]++;
    actions_.push_back(Action{role, scale, visit});
  }

  std::size_t scales_;
  std::vector<Action> actions_;
  std::map<std::pair<ActionRole, std::size_t>, std::size_t> visits_;
};

}  // namespace

std::string_view to_string(ActionRole r) {
  switch (r) {
    case ActionRole::down: return "down";
    case ActionRole::in: return "in";
    case ActionRole::up: return "up";
  }
  return "?";
}

std::vector<std::size_t> CycleSchedule::level_trace() const {
  std::vector<std::size_t> trace{1};
  for (const auto& a : actions) {
    if (a.role == ActionRole::down) trace.push_back(a.scale + 1);
    if (a.role == ActionRole::up) trace.push_back(a.scale);
  }
  return trace;
}

std::string CycleSchedule::str() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const auto& a = actions[i];
    os << (i ? " " : "");
    switch (a.role) {
      case ActionRole::down: os << "Down(" << a.scale << ")"; break;
      case ActionRole::in: os << "In(" << a.scale << ")"; break;
      case ActionRole::up: os << "Up(" << a.scale << ")"; break;
    }
  }
  return os.str();
}

CycleSchedule generate_schedule(CycleKind cycle, std::size_t scales) {
  if (scales < 2) {
    throw std::invalid_argument("generate_schedule: multi-scale cycles need at least 2 scales, got " +
                                std::to_string(scales));
  }
  Builder b(scales);
  switch (cycle) {
    case CycleKind::v: b.v_cycle(1); break;
    case CycleKind::f: b.f_cycle(1); break;
    case CycleKind::w: b.w_cycle(1); break;
  }
  return CycleSchedule{cycle, scales, b.take()};
}

}  // namespace mgno::ops
