// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <vector>

#include "cbsnr/config.hpp"
#include "cbsnr/credit_gate.hpp"
#include "cbsnr/simulator.hpp"
#include "cbsnr/traffic.hpp"

namespace cbsnr {

/// Largest TBS a UE can ever get: best CQI of its channel over the whole budget.
inline Bytes max_tbs_for(const UeSpec& ue, int rb_budget, const PhyTable& phy) {
  const int best = ue.markov ? std::max(ue.cqi, ue.cqi_bad) : ue.cqi;
  return tbs_lookup(mcs_for_cqi(best), rb_budget, phy);
}

/// Plan with placeholder credit parameters, good enough for an ungated run.
inline RunPlan ungated_plan(const SimConfig& cfg, const PhyTable& phy) {
  RunPlan p;
  p.config = cfg;
  p.phy = phy;
  p.q = cfg.traffic.q;
  for (const auto& ue : cfg.ues) {
    const PriorityClass& cls = cfg.classes.at(ue.cls);
    const Bytes mt = max_tbs_for(ue, cfg.rb_budget, phy);
    p.ues.push_back({cls, cls.payload_bytes, 1, -mt, mt, mt});
  }
  return p;
}

/// Mean bytes per slot carried by new transmissions when every queue is
/// saturated, RR without a gate. Retransmissions are already netted out.
inline double measure_capacity(const SimConfig& cfg, const PhyTable& phy) {
  SimConfig c = cfg;
  c.gate = GateVariant::None;
  c.engine = GateEngine::Naive;
  c.scheduler = SchedulerKind::RR;
  c.gate_pf_hybrid = false;
  c.traffic.saturate = true;
  c.num_slots = cfg.calibration_slots;
  c.warmup_slots = cfg.calibration_slots / 5;
  RunPlan p = ungated_plan(c, phy);
  p.q = 0.0;
  Simulator sim(std::move(p));
  sim.run();
  const MetricsReport r = sim.report();
  Bytes served = 0;
  for (const auto& m : r.ue) served += m.served_bytes;
  return static_cast<double>(served) / static_cast<double>(r.slots - r.warmup_slots);
}

/// Resolves a config into a runnable plan: capacity, load and credit parameters.
inline RunPlan make_plan(const SimConfig& cfg) {
  validate(cfg);
  const PhyTable phy = load_phy_table(cfg);
  RunPlan p = ungated_plan(cfg, phy);

  const bool need_capacity = cfg.traffic.mode == "rho" || cfg.allowance.mode == "calibrated";
  if (need_capacity) {
    p.c_dl = measure_capacity(cfg, phy);
    p.c_res = p.c_dl;
  }

  std::vector<Bytes> payloads;
  for (const auto& ue : cfg.ues) payloads.push_back(cfg.classes.at(ue.cls).payload_bytes);
  const double duty = OnOffSource::stationary_on(cfg.traffic.mean_on_slots, cfg.traffic.mean_off_slots);
  if (cfg.traffic.mode == "rho") {
    const LoadScaling ls = calibrate_load(payloads, duty, cfg.traffic.q, p.c_dl, cfg.traffic.target_rho,
                                          cfg.traffic.scale_payload_on_overload);
    p.q = ls.q;
    p.payload_factor = ls.payload_factor;
    p.offered_bytes_per_slot = ls.offered_bytes_per_slot;
    for (std::size_t u = 0; u < p.ues.size(); ++u) p.ues[u].payload = ls.payloads[u];
  } else {
    p.q = cfg.traffic.q;
    double sum = 0.0;
    for (Bytes s : payloads) sum += static_cast<double>(s);
    p.offered_bytes_per_slot = p.q * duty * sum;
  }

  p.reference_rate_bytes_per_s =
      cfg.allowance.mode == "calibrated" ? p.c_res * 1000.0 / cfg.slot_ms : cfg.allowance.reference_rate_bytes_per_s;
  std::map<PriorityId, int> per_class;
  for (const auto& ue : cfg.ues) ++per_class[ue.cls];
  if (cfg.gate != GateVariant::None) {
    for (std::size_t u = 0; u < p.ues.size(); ++u) {
      UePlan& up = p.ues[u];
      const double split = cfg.allowance.split_class_share ? per_class[up.cls.id] : 1;
      up.allowance = derive_allowance(up.cls.idle_slope_share / split, p.reference_rate_bytes_per_s, cfg.slot_ms);
      const CreditClamps cl = derive_clamps(up.cls, up.allowance, up.max_tbs, cfg.allowance.clamp_burst_factor);
      up.clamp_lo = cl.lo;
      up.clamp_hi = cl.hi;
    }
  }
  return p;
}

}  // namespace cbsnr
