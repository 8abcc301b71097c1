// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "cbsnr/common.hpp"

namespace cbsnr {

/// Circular list of UE ids with a round-robin cursor. New members join at the
/// tail, i.e. immediately behind the cursor, so a joiner waits for everyone
/// already in the ring. All operations except selection are O(1).
class EligibleRing {
 public:
  explicit EligibleRing(int num_ues = 0)
      : next_(num_ues, -1), prev_(num_ues, -1), member_(num_ues, 0) {}

  int capacity() const { return static_cast<int>(member_.size()); }
  int size() const { return size_; }
  bool empty() const { return size_ == 0; }
  bool contains(UeId u) const { return member_[u] != 0; }
  UeId cursor() const { return cursor_; }
  std::uint64_t ops() const { return ops_; }

  void push_back(UeId u) {
    if (member_[u]) return;
    ++ops_;
    member_[u] = 1;
    ++size_;
    if (cursor_ < 0) {
      next_[u] = prev_[u] = u;
      cursor_ = u;
      return;
    }
    const UeId tail = prev_[cursor_];
    next_[tail] = u;
    prev_[u] = tail;
    next_[u] = cursor_;
    prev_[cursor_] = u;
  }

  void remove(UeId u) {
    if (!member_[u]) return;
    ++ops_;
    member_[u] = 0;
    --size_;
    if (size_ == 0) {
      cursor_ = -1;
    } else {
      if (cursor_ == u) cursor_ = next_[u];
      next_[prev_[u]] = next_[u];
      prev_[next_[u]] = prev_[u];
    }
    next_[u] = prev_[u] = -1;
  }

  /// Moves the cursor to `u` (test and setup helper).
  void set_cursor(UeId u) {
    if (member_[u]) cursor_ = u;
  }

  /// Takes up to k members starting at the cursor, skipping those for which
  /// skip(u) holds, and moves the cursor past the last one taken.
  template <typename Skip>
  std::vector<UeId> select(int k, Skip&& skip) {
    std::vector<UeId> out;
    if (k <= 0 || cursor_ < 0) return out;
    UeId u = cursor_;
    UeId last = -1;
    for (int visited = 0; visited < size_ && static_cast<int>(out.size()) < k; ++visited) {
      ++ops_;
      if (!skip(u)) {
        out.push_back(u);
        last = u;
      }
      u = next_[u];
    }
    if (last >= 0) cursor_ = next_[last];
    return out;
  }

  std::vector<UeId> select(int k) {
    return select(k, [](UeId) { return false; });
  }

  /// Members in service order starting at the cursor.
  std::vector<UeId> members() const {
    std::vector<UeId> out;
    if (cursor_ < 0) return out;
    UeId u = cursor_;
    for (int i = 0; i < size_; ++i) {
      out.push_back(u);
      u = next_[u];
    }
    return out;
  }

 private:
  std::vector<UeId> next_;
  std::vector<UeId> prev_;
  std::vector<std::uint8_t> member_;
  UeId cursor_ = -1;
  int size_ = 0;
  std::uint64_t ops_ = 0;
};

}  // namespace cbsnr
