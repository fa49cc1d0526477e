#pragma once

#include <mutex>

namespace mgno::pde {

/// FFTW planner calls are not thread-safe; every plan creation/destruction takes this lock.
std::mutex& fftw_plan_mutex();

}  // namespace mgno::pde
