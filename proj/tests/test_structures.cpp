#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "cbsnr/event_engine.hpp"
#include "cbsnr/ring.hpp"
#include "cbsnr/wakeup_heap.hpp"

using namespace cbsnr;

TEST(Ring, SelectFromCursor) {
  EligibleRing r(8);
  r.push_back(1);
  r.push_back(2);
  r.push_back(3);
  r.set_cursor(2);
  EXPECT_EQ(r.select(2), (std::vector<UeId>{2, 3}));
  EXPECT_EQ(r.members().front(), 1);
}

TEST(Ring, SmallAndEmpty) {
  EligibleRing r(8);
  EXPECT_TRUE(r.select(3).empty());
  r.push_back(5);
  EXPECT_EQ(r.select(3), (std::vector<UeId>{5}));
  r.remove(5);
  EXPECT_TRUE(r.empty());
  EXPECT_TRUE(r.select(1).empty());
}

TEST(Ring, JoinsQueueBehindCursor) {
  EligibleRing r(8);
  for (UeId u : {0, 1, 2}) r.push_back(u);
  EXPECT_EQ(r.select(1), (std::vector<UeId>{0}));
  r.push_back(6);  // tail: behind 0, which was just served
  EXPECT_EQ(r.select(3), (std::vector<UeId>{1, 2, 0}));
  EXPECT_EQ(r.select(1), (std::vector<UeId>{6}));
}

TEST(Ring, RemovingCursorAdvances) {
  EligibleRing r(4);
  for (UeId u : {0, 1, 2}) r.push_back(u);
  r.remove(0);
  EXPECT_EQ(r.select(1), (std::vector<UeId>{1}));
}

TEST(Ring, SkipKeepsSkippedAhead) {
  EligibleRing r(4);
  for (UeId u : {0, 1, 2, 3}) r.push_back(u);
  const auto got = r.select(2, [](UeId u) { return u == 0; });
  EXPECT_EQ(got, (std::vector<UeId>{1, 2}));
  EXPECT_EQ(r.select(4), (std::vector<UeId>{3, 0, 1, 2}));
}

TEST(Ring, StaticRingServesEveryoneWithinCeilMOverK) {
  for (int m = 1; m <= 12; ++m) {
    for (int k = 1; k <= 5; ++k) {
      EligibleRing r(m);
      for (UeId u = 0; u < m; ++u) r.push_back(u);
      const int window = static_cast<int>(ceil_div(m, k));
      std::vector<std::vector<UeId>> calls;
      for (int i = 0; i < 5 * window; ++i) calls.push_back(r.select(k));
      for (int start = 0; start + window <= static_cast<int>(calls.size()); ++start) {
        std::vector<int> seen(m, 0);
        for (int i = start; i < start + window; ++i)
          for (UeId u : calls[i]) ++seen[u];
        for (int u = 0; u < m; ++u) ASSERT_GE(seen[u], 1) << "m=" << m << " k=" << k;
      }
    }
  }
}

TEST(Heap, PopsInWakeThenIdOrder) {
  WakeupHeap h;
  std::mt19937 gen(3);
  std::vector<std::pair<Slot, UeId>> ref;
  for (int i = 0; i < 500; ++i) {
    const Slot w = gen() % 50;
    const UeId u = static_cast<UeId>(gen() % 100);
    h.push({w, u, 0});
    ref.emplace_back(w, u);
  }
  std::sort(ref.begin(), ref.end());
  for (const auto& [w, u] : ref) {
    const auto e = h.pop();
    ASSERT_EQ(e.wake, w);
    ASSERT_EQ(e.ue, u);
  }
  EXPECT_TRUE(h.empty());
  EXPECT_EQ(h.inserts(), 500u);
  EXPECT_EQ(h.pops(), 500u);
}

TEST(WakeUp, Examples) {
  EXPECT_EQ(wakeup_slot(5, -7, 2), 9);
  EXPECT_EQ(wakeup_slot(0, -500, 20), 25);
  EXPECT_EQ(wakeup_slot(100, -1, 300), 101);
  EXPECT_THROW(wakeup_slot(0, 0, 5), std::logic_error);
  EXPECT_THROW(wakeup_slot(0, 3, 5), std::logic_error);
}

namespace {

UeState ue_with(Bytes credit, Bytes allowance, Bytes backlog, Slot last) {
  UeState ue;
  ue.allowance = allowance;
  ue.clamp_lo = -500;
  ue.clamp_hi = 240;
  ue.credit = credit;
  ue.backlog = backlog;
  ue.last_update_slot = last;
  return ue;
}

}  // namespace

TEST(LazyAccrue, Examples) {
  auto a = ue_with(-7, 2, 10, 0);
  lazy_accrue(a, 3);
  EXPECT_EQ(a.credit, -1);
  EXPECT_EQ(a.last_update_slot, 3);
  // the deficit leg stops at zero, never overshooting by the leftover allowance
  auto b = ue_with(-7, 2, 10, 0);
  lazy_accrue(b, wakeup_slot(0, -7, 2));
  EXPECT_EQ(b.credit, 0);
  auto c = ue_with(50, 20, 10, 0);
  lazy_accrue(c, 100);
  EXPECT_EQ(c.credit, 240);
  auto d = ue_with(-7, 2, 0, 0);
  lazy_accrue(d, 10);
  EXPECT_EQ(d.credit, 0);
  EXPECT_THROW(lazy_accrue(d, 5), InvariantError);
}

TEST(PostGrant, Examples) {
  auto a = ue_with(0, 20, 100, 0);
  a.free_harq = 1;
  EXPECT_EQ(post_grant_bookkeeping(a, 20, 300, 1), PostGrantAction::LeaveToHeap);
  EXPECT_EQ(a.credit, -280);
  EXPECT_EQ(wakeup_slot(1, a.credit, a.allowance), 1 + 14);

  auto b = ue_with(0, 20, 100, 0);
  b.free_harq = 1;
  EXPECT_EQ(post_grant_bookkeeping(b, 20, 10, 1), PostGrantAction::Stay);
  EXPECT_EQ(b.credit, 10);

  auto c = ue_with(0, 20, 0, 0);
  c.free_harq = 1;
  EXPECT_EQ(post_grant_bookkeeping(c, 20, 20, 1), PostGrantAction::LeaveIdle);
  EXPECT_EQ(c.credit, 0);

  auto d = ue_with(0, 20, 100, 0);
  d.free_harq = 0;
  EXPECT_EQ(post_grant_bookkeeping(d, 20, 10, 1), PostGrantAction::LeaveParked);
}
