// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "cbsnr/common.hpp"
#include "cbsnr/credit_gate.hpp"
#include "cbsnr/ring.hpp"
#include "cbsnr/ue_state.hpp"
#include "cbsnr/wakeup_heap.hpp"

namespace cbsnr {

struct EventCounters {
  std::uint64_t activations = 0;   // A: queue became non-empty
  std::uint64_t new_grants = 0;    // G
  std::uint64_t wakeups = 0;       // valid heap pops
  std::uint64_t stale_pops = 0;
  std::uint64_t heap_inserts = 0;
  std::uint64_t heap_comparisons = 0;
  std::uint64_t ring_ops = 0;
  std::uint64_t harq_touches = 0;  // parked UEs revisited when a HARQ process frees
  std::uint64_t touched = 0;       // UE state reads/writes by the gate, summed over slots
  std::uint64_t slots = 0;
  std::uint64_t max_touched_in_slot = 0;

  /// Abstract work of the gate: UE touches, heap comparisons, ring steps, one peek per slot.
  std::uint64_t work() const { return touched + heap_comparisons + ring_ops + slots; }
};

/// First slot at which a UE holding `credit` < 0 at slot `now` is back at zero.
inline Slot wakeup_slot(Slot now, Bytes credit, Bytes allowance) {
  if (credit >= 0) throw std::logic_error("wakeup_slot: credit must be negative");
  if (allowance <= 0) throw std::logic_error("wakeup_slot: allowance must be positive");
  return now + ceil_div(-credit, allowance);
}

/// Brings a UE's credit forward to `now` as if every skipped slot had run the
/// no-grant recursion. The backlog status is constant over skipped slots
/// because every queue transition is itself a touch point.
inline void lazy_accrue(UeState& ue, Slot now) {
  if (ue.last_update_slot > now) throw InvariantError(now, "lazy_accrue: UE " + std::to_string(ue.id) + " updated in the future");
  ue.credit = accrue_without_grant(ue.credit, ue.allowance, ue.clamp_hi, ue.backlogged(), now - ue.last_update_slot);
  ue.last_update_slot = now;
}

enum class PostGrantAction { Stay, LeaveIdle, LeaveToHeap, LeaveParked };

/// Applies the debit of a new grant. `pre_debit_credit` is f(C[n]) for the
/// grant slot, `next_slot` is n+1. The UE's queue must already reflect the
/// service. A positive leftover on a drained queue is zeroed by the next
/// accrual step, which keeps slot-boundary credits identical to the
/// per-slot recursion.
inline PostGrantAction post_grant_bookkeeping(UeState& ue, Bytes pre_debit_credit, Bytes debit, Slot next_slot) {
  ue.credit = clamp_credit(pre_debit_credit - debit, ue.clamp_lo, ue.clamp_hi);
  ue.last_update_slot = next_slot;
  if (!ue.backlogged()) return PostGrantAction::LeaveIdle;
  if (ue.credit < 0) return PostGrantAction::LeaveToHeap;
  if (!ue.has_free_harq()) return PostGrantAction::LeaveParked;
  return PostGrantAction::Stay;
}

/// A new grant as seen by the credit gate.
struct GrantOutcome {
  UeId ue = 0;
  Bytes tbs = 0;
  Bytes backlog_before = 0;
};

/// Common interface of the per-slot (naive) and event-driven gates. The gate
/// owns ring membership for RR and the per-UE credit state.
class GateEngineBase {
 public:
  GateEngineBase(std::vector<UeState>& ues, EligibleRing& ring, GateVariant variant, EventCounters& counters)
      : ues_(ues), ring_(ring), variant_(variant), counters_(counters) {}
  virtual ~GateEngineBase() = default;

  bool gated() const { return variant_ != GateVariant::None; }
  DebitVariant debit_variant() const { return variant_ == GateVariant::PU ? DebitVariant::PU : DebitVariant::DT; }

  /// After HARQ feedback. Brings ring membership up to date for slot n.
  virtual void on_slot_start(Slot n, std::span<const UeId> harq_freed) = 0;
  /// A selected UE, before its queue is served in slot n.
  virtual void before_service(UeState& ue, Slot n) = 0;
  /// After service of slot n; grants in selection order.
  virtual void after_grants(Slot n, std::span<const GrantOutcome> grants) = 0;
  /// Queue of `ue` goes non-empty with the arrivals of slot next-1. Called before the enqueue.
  virtual void on_queue_activation(UeState& ue, Slot next) = 0;
  /// Credit at the start of slot n without mutating state.
  virtual Bytes credit_at(const UeState& ue, Slot n) const = 0;

 protected:
  void check_clamps(const UeState& ue, Slot n) const {
    if (ue.credit < ue.clamp_lo || ue.credit > ue.clamp_hi)
      throw InvariantError(n, "credit of UE " + std::to_string(ue.id) + " = " + std::to_string(ue.credit) +
                                  " outside [" + std::to_string(ue.clamp_lo) + ", " + std::to_string(ue.clamp_hi) + "]");
  }

  std::vector<UeState>& ues_;
  EligibleRing& ring_;
  GateVariant variant_;
  EventCounters& counters_;
};

/// Updates every UE's credit every slot and rebuilds ring membership by a
/// full scan.
class NaiveGate final : public GateEngineBase {
 public:
  using GateEngineBase::GateEngineBase;

  void on_slot_start(Slot n, std::span<const UeId>) override {
    for (auto& ue : ues_) {
      const bool member = ue.backlogged() && ue.has_free_harq() && (!gated() || ue.credit >= 0);
      if (member && !ring_.contains(ue.id)) ring_.push_back(ue.id);
    }
    counters_.touched += ues_.size();
    counters_.max_touched_in_slot = std::max<std::uint64_t>(counters_.max_touched_in_slot, ues_.size());
    (void)n;
  }

  void before_service(UeState&, Slot) override {}

  void after_grants(Slot n, std::span<const GrantOutcome> grants) override {
    if (gated()) {
      granted_.assign(ues_.size(), nullptr);
      for (const auto& g : grants) granted_[g.ue] = &g;
      for (auto& ue : ues_) {
        const GrantOutcome* g = granted_[ue.id];
        CreditUpdateInput in{ue.credit, g ? g->backlog_before : ue.backlog, ue.allowance, g != nullptr,
                             g ? g->tbs : 0, ue.clamp_lo, ue.clamp_hi};
        ue.credit = slot_update(in, debit_variant());
        ue.last_update_slot = n + 1;
        check_clamps(ue, n + 1);
      }
    }
    for (const auto& g : grants) {
      const UeState& ue = ues_[g.ue];
      if (!ue.backlogged() || !ue.has_free_harq() || (gated() && ue.credit < 0)) ring_.remove(g.ue);
    }
  }

  void on_queue_activation(UeState&, Slot) override {}

  Bytes credit_at(const UeState& ue, Slot) const override { return ue.credit; }

 private:
  std::vector<const GrantOutcome*> granted_;
};

/// Touches a UE only on wake-up, activation, grant, or when a parked UE gets
/// a HARQ process back. Credit is accrued lazily from last_update_slot.
class EventGate final : public GateEngineBase {
 public:
  EventGate(std::vector<UeState>& ues, EligibleRing& ring, GateVariant variant, EventCounters& counters)
      : GateEngineBase(ues, ring, variant, counters) {
    if (!gated()) throw ConfigError("engine: the event-driven gate needs gate DT or PU");
  }

  const WakeupHeap& heap() const { return heap_; }

  void on_slot_start(Slot n, std::span<const UeId> harq_freed) override {
    std::uint64_t touched = 0;
    candidates_.clear();
    while (!heap_.empty() && heap_.top().wake <= n) {
      const auto e = heap_.pop();
      ++touched;
      if (e.wake < n) throw InvariantError(n, "missed wake-up of UE " + std::to_string(e.ue) + " at slot " + std::to_string(e.wake));
      UeState& ue = ues_[e.ue];
      if (e.generation != ue.generation || ue.membership != Membership::Heap) {
        ++counters_.stale_pops;
        continue;
      }
      ++counters_.wakeups;
      // deficit drift lands exactly on zero at the wake-up slot
      ue.credit = 0;
      ue.last_update_slot = n;
      ue.membership = ue.backlogged() ? Membership::Parked : Membership::Idle;
      candidates_.push_back(e.ue);
    }
    for (UeId u : harq_freed) {
      if (ues_[u].membership == Membership::Parked) {
        ++counters_.harq_touches;
        ++touched;
        candidates_.push_back(u);
      }
    }
    candidates_.insert(candidates_.end(), pending_.begin(), pending_.end());
    pending_.clear();
    std::sort(candidates_.begin(), candidates_.end());
    candidates_.erase(std::unique(candidates_.begin(), candidates_.end()), candidates_.end());
    for (UeId u : candidates_) {
      UeState& ue = ues_[u];
      if (ring_.contains(u)) continue;
      lazy_accrue(ue, n);
      check_clamps(ue, n);
      if (!ue.backlogged()) {
        ue.membership = Membership::Idle;
      } else if (ue.credit < 0) {
        // only reachable through direct API use; regular flow parks these in the heap
        push_heap(ue, n);
      } else if (ue.has_free_harq()) {
        ring_.push_back(u);
        ue.membership = Membership::Ring;
      } else {
        ue.membership = Membership::Parked;
      }
    }
    account(touched);
  }

  void before_service(UeState& ue, Slot n) override {
    lazy_accrue(ue, n);
    check_clamps(ue, n);
  }

  void after_grants(Slot n, std::span<const GrantOutcome> grants) override {
    std::uint64_t touched = 0;
    for (const auto& g : grants) {
      UeState& ue = ues_[g.ue];
      ++touched;
      const Bytes pre = pre_debit_update(ue.credit, ue.allowance, g.backlog_before);
      const Bytes debit = compute_debit(debit_variant(), true, g.tbs, g.backlog_before);
      const auto action = post_grant_bookkeeping(ue, pre, debit, n + 1);
      check_clamps(ue, n + 1);
      switch (action) {
        case PostGrantAction::Stay:
          break;
        case PostGrantAction::LeaveIdle:
          ring_.remove(g.ue);
          ue.membership = Membership::Idle;
          break;
        case PostGrantAction::LeaveToHeap:
          ring_.remove(g.ue);
          push_heap(ue, n + 1);
          break;
        case PostGrantAction::LeaveParked:
          ring_.remove(g.ue);
          ue.membership = Membership::Parked;
          break;
      }
    }
    account(touched);
  }

  void on_queue_activation(UeState& ue, Slot next) override {
    lazy_accrue(ue, next);
    check_clamps(ue, next);
    account(1);
    if (ue.credit < 0) {
      push_heap(ue, next);
    } else {
      pending_.push_back(ue.id);
    }
  }

  Bytes credit_at(const UeState& ue, Slot n) const override {
    return accrue_without_grant(ue.credit, ue.allowance, ue.clamp_hi, ue.backlogged(), n - ue.last_update_slot);
  }

  /// Total of valid + stale entries still queued.
  std::size_t heap_size() const { return heap_.size(); }

  void finish_slot() {
    counters_.heap_comparisons = heap_.comparisons();
    counters_.heap_inserts = heap_.inserts();
    counters_.max_touched_in_slot = std::max(counters_.max_touched_in_slot, slot_touched_);
    slot_touched_ = 0;
  }

 private:
  void push_heap(UeState& ue, Slot now) {
    ++ue.generation;
    ue.membership = Membership::Heap;
    const Slot wake = wakeup_slot(now, ue.credit, ue.allowance);
    heap_.push({wake, ue.id, ue.generation});
  }

  void account(std::uint64_t touched) {
    counters_.touched += touched;
    slot_touched_ += touched;
  }

  WakeupHeap heap_;
  std::vector<UeId> candidates_;
  std::vector<UeId> pending_;
  std::uint64_t slot_touched_ = 0;
};

}  // namespace cbsnr
