#include <gtest/gtest.h>

#include <random>

#include "cbsnr/credit_gate.hpp"

using namespace cbsnr;

TEST(Allowance, ShareTimesRate) {
  EXPECT_EQ(derive_allowance(0.75, 400'000, 1.0), 300);
  EXPECT_EQ(derive_allowance(0.05, 400'000, 1.0), 20);
  EXPECT_EQ(derive_allowance(0.000001, 1000, 1.0), 1);
  EXPECT_EQ(derive_allowance(0.5, 400'000, 0.5), 100);
  EXPECT_THROW(derive_allowance(0.0, 1000, 1.0), ConfigError);
  EXPECT_THROW(derive_allowance(-0.1, 1000, 1.0), ConfigError);
}

TEST(Clamps, BurstAndDeficit) {
  const PriorityClass p1{PriorityId::P1, 0.75, 80};
  const auto c = derive_clamps(p1, 60, 500);
  EXPECT_EQ(c.hi, 240);  // 2 * ceil(80/60) * 60
  EXPECT_EQ(c.lo, -500);
  const PriorityClass p3{PriorityId::P3, 0.05, 240};
  EXPECT_EQ(derive_clamps(p3, 20, 500).hi, 2 * 12 * 20);
}

TEST(Recursion, PreDebitBranches) {
  EXPECT_EQ(pre_debit_update(-5, 2, 10), -3);
  EXPECT_EQ(pre_debit_update(10, 2, 0), 0);
  EXPECT_EQ(pre_debit_update(10, 2, 10), 12);
  EXPECT_EQ(pre_debit_update(-1, 5, 10), 0);
  // zero credit on an empty queue stays at zero
  EXPECT_EQ(pre_debit_update(0, 7, 0), 0);
  EXPECT_EQ(pre_debit_update(-3, 7, 0), 0);
}

TEST(Recursion, Debit) {
  EXPECT_EQ(compute_debit(DebitVariant::DT, true, 100, 60), 100);
  EXPECT_EQ(compute_debit(DebitVariant::PU, true, 100, 60), 60);
  EXPECT_EQ(compute_debit(DebitVariant::PU, false, 0, 500), 0);
  EXPECT_EQ(compute_debit(DebitVariant::DT, false, 300, 500), 0);
}

TEST(Recursion, Clamp) {
  EXPECT_EQ(clamp_credit(-900, -500, 240), -500);
  EXPECT_EQ(clamp_credit(300, -500, 240), 240);
  EXPECT_EQ(clamp_credit(0, -500, 240), 0);
}

TEST(Recursion, SlotUpdate) {
  EXPECT_EQ(slot_update({-5, 0, 2, false, 0, -500, 240}, DebitVariant::DT), -3);
  EXPECT_EQ(slot_update({50, 200, 20, true, 300, -500, 240}, DebitVariant::DT), -230);
  EXPECT_EQ(slot_update({50, 200, 20, true, 300, -500, 240}, DebitVariant::PU), -130);
  // single clamp after the debit
  EXPECT_EQ(slot_update({-450, 200, 20, true, 300, -500, 240}, DebitVariant::DT), -500);
}

TEST(Eligibility, GateNeedsNonNegativeCredit) {
  EXPECT_TRUE(is_gate_eligible({10, true, false, 0}));
  EXPECT_FALSE(is_gate_eligible({10, true, false, -1}));
  EXPECT_FALSE(is_gate_eligible({0, true, false, 100}));
  EXPECT_FALSE(is_gate_eligible({10, false, false, 100}));
  EXPECT_FALSE(is_gate_eligible({10, true, true, 100}));
  EXPECT_TRUE(is_mac_eligible({10, true, false, -100}));
}

namespace {

struct Fuzz {
  std::mt19937_64 gen{12345};
  Bytes range(Bytes a, Bytes b) { return std::uniform_int_distribution<Bytes>(a, b)(gen); }
  bool coin() { return range(0, 1) == 1; }

  CreditUpdateInput input() {
    CreditUpdateInput in;
    in.lo = -range(1, 2000);
    in.hi = range(1, 2000);
    in.allowance = range(1, 400);
    in.credit_in = range(in.lo, in.hi);
    in.backlog = coin() ? 0 : range(1, 3000);
    in.granted = coin();
    in.tbs = in.granted ? range(0, 2000) : 0;
    return in;
  }
};

}  // namespace

TEST(Properties, OutputStaysInsideClamps) {
  Fuzz f;
  for (int i = 0; i < 200'000; ++i) {
    const auto in = f.input();
    for (auto v : {DebitVariant::DT, DebitVariant::PU}) {
      const Bytes out = slot_update(in, v);
      ASSERT_GE(out, in.lo);
      ASSERT_LE(out, in.hi);
    }
  }
}

TEST(Properties, MonotoneInCreditAndDebit) {
  Fuzz f;
  for (int i = 0; i < 100'000; ++i) {
    auto a = f.input();
    auto b = a;
    b.credit_in = std::min(a.hi, a.credit_in + f.range(0, 300));
    for (auto v : {DebitVariant::DT, DebitVariant::PU}) ASSERT_LE(slot_update(a, v), slot_update(b, v));

    // larger TBS, same everything else
    auto c = a;
    c.granted = true;
    auto d = c;
    d.tbs = c.tbs + f.range(0, 500);
    ASSERT_GE(slot_update(c, DebitVariant::DT), slot_update(d, DebitVariant::DT));
    ASSERT_GE(slot_update(c, DebitVariant::PU), slot_update(d, DebitVariant::PU));
    // a grant never raises credit
    auto e = a;
    e.granted = false;
    e.tbs = 0;
    ASSERT_GE(slot_update(e, DebitVariant::DT), slot_update(c, DebitVariant::DT));
  }
}

TEST(Properties, PartialUsageDominatesOnSharedInputs) {
  Fuzz f;
  for (int run = 0; run < 200; ++run) {
    const Bytes lo = -f.range(100, 2000), hi = f.range(50, 2000), dc = f.range(1, 300);
    Bytes dt = 0, pu = 0;
    for (int n = 0; n < 2000; ++n) {
      const Bytes q = f.coin() ? 0 : f.range(1, 1500);
      const bool g = q > 0 && f.coin();
      const Bytes tbs = g ? f.range(1, 1500) : 0;
      dt = slot_update({dt, q, dc, g, tbs, lo, hi}, DebitVariant::DT);
      pu = slot_update({pu, q, dc, g, tbs, lo, hi}, DebitVariant::PU);
      ASSERT_GE(pu, dt) << "run " << run << " slot " << n;
    }
  }
}

TEST(Properties, RecoveryFromLowerClampIsTight) {
  for (Bytes lo : {-500, -499, -37, -1, -1200}) {
    for (Bytes dc : {1, 3, 20, 7, 300}) {
      const Bytes steps = ceil_div(-lo, dc);
      Bytes c = lo;
      for (Bytes s = 1; s <= steps; ++s) {
        c = slot_update({c, 100, dc, false, 0, lo, 1000}, DebitVariant::DT);
        if (s < steps) {
          ASSERT_LT(c, 0) << lo << " " << dc << " step " << s;
        }
      }
      EXPECT_GE(c, 0);
      EXPECT_EQ(c, 0);  // min(C + dC, 0) lands exactly on zero
    }
  }
}

TEST(ClosedForm, MatchesIteratedRecursion) {
  Fuzz f;
  for (int i = 0; i < 50'000; ++i) {
    const Bytes lo = -f.range(1, 3000), hi = f.range(1, 3000), dc = f.range(1, 500);
    const Bytes c0 = f.range(lo, hi);
    const bool backlogged = f.coin();
    const Slot steps = f.range(0, 60);
    Bytes c = c0;
    for (Slot s = 0; s < steps; ++s) c = slot_update({c, backlogged ? 1 : 0, dc, false, 0, lo, hi}, DebitVariant::DT);
    ASSERT_EQ(accrue_without_grant(c0, dc, hi, backlogged, steps), c);
  }
}

TEST(ClosedForm, Examples) {
  EXPECT_EQ(accrue_without_grant(-7, 2, 240, true, 3), -1);
  EXPECT_EQ(accrue_without_grant(-7, 2, 240, true, 10), 12);  // zero after 4 steps, then six more accruals
  EXPECT_EQ(accrue_without_grant(-7, 2, 240, true, 4), 0);
  EXPECT_EQ(accrue_without_grant(50, 20, 240, true, 100), 240);
  EXPECT_EQ(accrue_without_grant(50, 20, 240, false, 1), 0);
  EXPECT_EQ(accrue_without_grant(-1, 1, 1'000'000, true, Slot{1} << 60), 1'000'000);
}
