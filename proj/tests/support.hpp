#pragma once

#include "cbsnr/calibration.hpp"
#include "cbsnr/config.hpp"
#include "cbsnr/simulator.hpp"

namespace cbsnr::testing_support {

/// Two UEs per class, p1 on the weakest channel.
inline SimConfig six_ue_config(GateVariant gate, SchedulerKind sched, double rho, std::uint64_t seed,
                               Slot slots = 20'000) {
  SimConfig c;
  c.name = "six_ue";
  c.classes = default_classes();
  for (auto [cls, cqi] : {std::pair{PriorityId::P1, 2}, {PriorityId::P2, 5}, {PriorityId::P3, 13}})
    for (int i = 0; i < 2; ++i) c.ues.push_back({cls, cqi});
  c.rb_budget = 52;
  c.rbg_size = 4;
  c.grant_cap = 2;
  c.gate = gate;
  c.scheduler = sched;
  c.num_slots = slots;
  c.warmup_slots = 2000;
  c.traffic.target_rho = rho;
  c.traffic.scale_payload_on_overload = true;
  c.seed = seed;
  return c;
}

/// U UEs spread round-robin over the three classes and a spread of CQIs.
inline SimConfig population_config(int u, GateVariant gate, double rho, std::uint64_t seed, Slot slots) {
  SimConfig c;
  c.name = "population";
  c.classes = default_classes();
  static constexpr int kCqi[] = {2, 5, 13, 7, 10, 15, 4};
  for (int i = 0; i < u; ++i) c.ues.push_back({static_cast<PriorityId>(1 + i % 3), kCqi[i % 7]});
  c.gate = gate;
  c.num_slots = slots;
  c.warmup_slots = std::min<Slot>(2000, slots / 5);
  c.traffic.target_rho = rho;
  c.traffic.scale_payload_on_overload = true;
  c.seed = seed;
  c.calibration_slots = 3000;
  return c;
}

}  // namespace cbsnr::testing_support
