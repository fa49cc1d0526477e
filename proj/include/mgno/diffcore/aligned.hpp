/// @file aligned.hpp
/// @brief Cache-line aligned vectors.

#pragma once

#include <cstddef>
#include <new>
#include <vector>

namespace mgno::diff {

/// Cache-line aligned storage. Vectorized reductions peel a data-dependent
/// number of leading elements to reach alignment, so fixing the alignment of
/// every buffer makes their summation order, and thus results, reproducible.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlignment)); }
  void deallocate(T* p, std::size_t) { ::operator delete(p, kAlignment); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const { return true; }
};

using Buffer = std::vector<double, AlignedAllocator<double>>;

}  // namespace mgno::diff
