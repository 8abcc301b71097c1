// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "cbsnr/common.hpp"

namespace cbsnr {

/// Binary min-heap of wake-up slots. Entries carry a generation tag so the
/// owner can invalidate an entry without decrease-key; ties on the slot are
/// broken by UE id, which makes pop order deterministic.
class WakeupHeap {
 public:
  struct Entry {
    Slot wake = 0;
    UeId ue = 0;
    std::uint32_t generation = 0;
  };

  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  const Entry& top() const { return heap_.front(); }

  void push(Entry e) {
    ++inserts_;
    heap_.push_back(e);
    sift_up(heap_.size() - 1);
  }

  Entry pop() {
    ++pops_;
    Entry out = heap_.front();
    heap_.front() = heap_.back();
    heap_.pop_back();
    if (!heap_.empty()) sift_down(0);
    return out;
  }

  std::uint64_t inserts() const { return inserts_; }
  std::uint64_t pops() const { return pops_; }
  std::uint64_t comparisons() const { return comparisons_; }

 private:
  bool less(const Entry& a, const Entry& b) {
    ++comparisons_;
    return a.wake != b.wake ? a.wake < b.wake : a.ue < b.ue;
  }

  void sift_up(std::size_t i) {
    while (i > 0) {
      const std::size_t parent = (i - 1) / 2;
      if (!less(heap_[i], heap_[parent])) break;
      std::swap(heap_[i], heap_[parent]);
      i = parent;
    }
  }

  void sift_down(std::size_t i) {
    const std::size_t n = heap_.size();
    for (;;) {
      std::size_t best = i;
      const std::size_t l = 2 * i + 1;
      const std::size_t r = l + 1;
      if (l < n && less(heap_[l], heap_[best])) best = l;
      if (r < n && less(heap_[r], heap_[best])) best = r;
      if (best == i) return;
      std::swap(heap_[i], heap_[best]);
      i = best;
    }
  }

  std::vector<Entry> heap_;
  std::uint64_t inserts_ = 0;
  std::uint64_t pops_ = 0;
  std::uint64_t comparisons_ = 0;
};

}  // namespace cbsnr
