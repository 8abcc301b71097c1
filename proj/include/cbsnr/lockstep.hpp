// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <sstream>
#include <string>

#include "cbsnr/simulator.hpp"

namespace cbsnr {

struct LockstepResult {
  bool identical = true;
  Slot slots = 0;
  Slot first_mismatch = kNoSlot;
  std::string detail;
  EventCounters naive;
  EventCounters event;
};

namespace detail {

inline std::optional<std::string> diff_records(const SlotRecord& a, const SlotRecord& b) {
  if (a.credits != b.credits) {
    for (std::size_t u = 0; u < a.credits.size(); ++u)
      if (a.credits[u] != b.credits[u])
        return "credit of UE " + std::to_string(u) + ": naive " + std::to_string(a.credits[u]) + ", event " +
               std::to_string(b.credits[u]);
  }
  if (a.eligible != b.eligible) return std::string("eligible set differs");
  if (a.grants != b.grants) return std::string("grants differ");
  if (a.arrivals != b.arrivals) return std::string("arrivals differ");
  return std::nullopt;
}

}  // namespace detail

/// Runs the naive and the event-driven gate side by side on the same plan and
/// compares every slot: credits at the slot boundary, E[n], grants, arrivals,
/// and finally the delivered packets.
inline LockstepResult run_lockstep(const RunPlan& plan) {
  RunPlan pn = plan, pe = plan;
  pn.config.engine = GateEngine::Naive;
  pe.config.engine = GateEngine::EventDriven;
  Simulator naive(pn), event(pe);
  SlotRecord ra, rb;
  naive.set_observer([&](const SlotRecord& r) { ra = r; });
  event.set_observer([&](const SlotRecord& r) { rb = r; });

  LockstepResult out;
  while (naive.now() < plan.config.num_slots) {
    naive.step();
    event.step();
    ++out.slots;
    if (auto d = detail::diff_records(ra, rb)) {
      out.identical = false;
      out.first_mismatch = ra.slot;
      out.detail = *d;
      break;
    }
  }
  if (out.identical) {
    const auto a = naive.report(), b = event.report();
    bool same = a.packets.size() == b.packets.size();
    for (std::size_t i = 0; same && i < a.packets.size(); ++i)
      same = a.packets[i].ue == b.packets[i].ue && a.packets[i].arrival_slot == b.packets[i].arrival_slot &&
             a.packets[i].latency_slots == b.packets[i].latency_slots;
    if (!same) {
      out.identical = false;
      out.detail = "delivered packets differ";
    }
  }
  out.naive = naive.counters();
  out.event = event.counters();
  return out;
}

}  // namespace cbsnr
