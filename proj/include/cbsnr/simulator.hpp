// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cbsnr/common.hpp"
#include "cbsnr/config.hpp"
#include "cbsnr/credit_gate.hpp"
#include "cbsnr/event_engine.hpp"
#include "cbsnr/phy.hpp"
#include "cbsnr/ring.hpp"
#include "cbsnr/rng.hpp"
#include "cbsnr/schedulers.hpp"
#include "cbsnr/traffic.hpp"
#include "cbsnr/ue_state.hpp"

namespace cbsnr {

/// Per-UE parameters after calibration.
struct UePlan {
  PriorityClass cls;
  Bytes payload = 1;
  Bytes allowance = 1;
  Bytes clamp_lo = -1;
  Bytes clamp_hi = 1;
  Bytes max_tbs = 1;
};

/// A fully resolved run: validated config plus derived per-UE parameters.
struct RunPlan {
  SimConfig config;
  PhyTable phy;
  std::vector<UePlan> ues;
  double q = 0.0;
  double payload_factor = 1.0;
  double offered_bytes_per_slot = 0.0;
  double c_dl = 0.0;   // measured saturated new-transmission service, bytes/slot
  double c_res = 0.0;  // residual rate the shares refer to, bytes/slot
  double reference_rate_bytes_per_s = 0.0;
};

struct GrantRecord {
  UeId ue = 0;
  bool retx = false;
  int rbs = 0;
  int mcs = 0;
  Bytes tbs = 0;
  Bytes served = 0;
  int harq_pid = 0;

  friend bool operator==(const GrantRecord&, const GrantRecord&) = default;
};

/// Observables of one slot.
struct SlotRecord {
  Slot slot = 0;
  std::vector<Bytes> credits;  // C_u[n] at slot start; empty without a gate
  std::vector<UeId> eligible;  // E[n] at the grant phase
  std::vector<GrantRecord> grants;
  std::vector<std::pair<UeId, Bytes>> arrivals;
  std::vector<UeId> retx_ues;
  int grant_capacity = 0;  // new grants the slot could carry: min(K, residual RBGs)
  std::uint64_t touched = 0;

  void reset(Slot n) {
    slot = n;
    credits.clear();
    eligible.clear();
    grants.clear();
    arrivals.clear();
    retx_ues.clear();
    grant_capacity = 0;
    touched = 0;
  }
};

struct PacketResult {
  UeId ue = 0;
  PriorityId cls = PriorityId::P1;
  Slot arrival_slot = 0;
  Slot latency_slots = 0;
};

struct UeMetrics {
  Bytes served_bytes = 0;  // sum of min(TBS, Q) over new grants after warm-up
  Bytes tbs_bytes = 0;     // sum of TBS over new grants after warm-up
  std::uint64_t new_grants = 0;
  Bytes arrived_bytes = 0;
  Bytes acked_bytes = 0;
  Bytes dropped_bytes = 0;

  double utilization() const {
    return tbs_bytes > 0 ? static_cast<double>(served_bytes) / static_cast<double>(tbs_bytes) : 1.0;
  }
};

struct MetricsReport {
  Slot slots = 0;
  Slot warmup_slots = 0;
  double slot_ms = 1.0;
  std::vector<PacketResult> packets;  // delivered after warm-up
  std::vector<UeMetrics> ue;
  std::vector<PriorityId> ue_class;
  EventCounters counters;
  EventCounters counters_at_warmup;  // snapshot taken as the first measured slot starts
  std::uint64_t tb_feedbacks = 0;
  std::uint64_t first_tx_feedbacks = 0;
  std::uint64_t first_tx_nacks = 0;
  std::uint64_t tb_drops = 0;
  std::uint64_t retx_grants = 0;
  std::uint64_t packets_lost = 0;
  double c_dl = 0.0;
  double c_res = 0.0;
  double offered_bytes_per_slot = 0.0;
  double measured_rho = 0.0;

  /// Counter growth per slot over the measured (post warm-up) window.
  double steady_rate(std::uint64_t EventCounters::*field) const {
    const double span = static_cast<double>(counters.slots - counters_at_warmup.slots);
    return span > 0 ? static_cast<double>(counters.*field - counters_at_warmup.*field) / span : 0.0;
  }
  double steady_work() const {
    const double span = static_cast<double>(counters.slots - counters_at_warmup.slots);
    return span > 0 ? static_cast<double>(counters.work() - counters_at_warmup.work()) / span : 0.0;
  }

  double served_rate(UeId u) const {
    const Slot span = slots - warmup_slots;
    return span > 0 ? static_cast<double>(ue[u].served_bytes) / static_cast<double>(span) : 0.0;
  }

  std::vector<double> latencies_ms(PriorityId cls) const {
    std::vector<double> out;
    for (const auto& p : packets)
      if (p.cls == cls) out.push_back(static_cast<double>(p.latency_slots) * slot_ms);
    return out;
  }

  /// served / TBS pooled over the UEs of a class (or all UEs).
  double utilization(std::optional<PriorityId> cls = std::nullopt) const {
    Bytes s = 0, t = 0;
    for (std::size_t u = 0; u < ue.size(); ++u) {
      if (cls && ue_class[u] != *cls) continue;
      s += ue[u].served_bytes;
      t += ue[u].tbs_bytes;
    }
    return t > 0 ? static_cast<double>(s) / static_cast<double>(t) : 1.0;
  }
};

struct ServeResult {
  Bytes served = 0;
  Bytes padding = 0;
};

/// Moves min(tbs, backlog) bytes from the head of the UE's queue into a new
/// TB. Packets may be split across TBs.
inline ServeResult serve_queue(UeState& ue, std::vector<Packet>& packets, Bytes tbs,
                               std::vector<TbSegment>* segments = nullptr) {
  ServeResult r;
  Bytes room = std::max<Bytes>(tbs, 0);
  while (room > 0 && !ue.queue.empty()) {
    Packet& p = packets[ue.queue.front()];
    const Bytes take = std::min(room, p.remaining);
    p.remaining -= take;
    room -= take;
    r.served += take;
    const bool final = p.remaining == 0;
    if (segments) {
      ++p.open_tbs;
      segments->push_back({ue.queue.front(), take, final});
    }
    if (final) ue.queue.pop_front();
  }
  ue.backlog -= r.served;
  r.padding = std::max<Bytes>(tbs, 0) - r.served;
  return r;
}

class Simulator {
 public:
  using Observer = std::function<void(const SlotRecord&)>;

  explicit Simulator(RunPlan plan) : plan_(std::move(plan)) { init(); }

  const RunPlan& plan() const { return plan_; }
  Slot now() const { return now_; }
  const std::vector<UeState>& ues() const { return ues_; }
  const EventCounters& counters() const { return counters_; }
  const EligibleRing& ring() const { return ring_; }
  const std::vector<Packet>& packets() const { return packets_; }
  bool event_driven() const { return event_driven_; }
  bool gated() const { return plan_.config.gate != GateVariant::None; }

  /// Credit of u at the start of the current slot.
  Bytes credit(UeId u) const { return gate_->credit_at(ues_[u], now_); }

  void set_observer(Observer obs) { observer_ = std::move(obs); }

  void run() {
    while (now_ < plan_.config.num_slots) step();
  }

  void step();

  MetricsReport report() const {
    MetricsReport r = metrics_;
    r.slots = now_;
    r.counters = counters_;
    const Slot span = now_ - plan_.config.warmup_slots;
    Bytes arrived = 0;
    for (const auto& m : r.ue) arrived += m.arrived_bytes;
    r.measured_rho = (span > 0 && plan_.c_dl > 0)
                         ? static_cast<double>(arrived) / static_cast<double>(span) / plan_.c_dl
                         : 0.0;
    return r;
  }

  /// arrived = acked + queued + in HARQ + dropped, in bytes, over the whole run.
  bool conservation_holds() const {
    Bytes queued = 0;
    for (const auto& ue : ues_) queued += ue.backlog;
    return total_arrived_ == total_acked_ + queued + in_harq_bytes_ + total_dropped_;
  }

 private:
  void init();
  void settle(UeState& ue, HarqProcess& proc, Slot n, bool ack);
  void release(UeState& ue, HarqProcess& proc);
  void enqueue(UeState& ue, Bytes size, Slot n);
  void schedule_feedback(UeId u, int pid, Slot tx_slot) {
    calendar_[static_cast<std::size_t>((tx_slot + plan_.config.harq_rtt_slots) % calendar_.size())].push_back({u, pid});
  }

  RunPlan plan_;
  std::vector<UeState> ues_;
  std::vector<Packet> packets_;
  std::vector<OnOffSource> sources_;
  std::vector<RngStream> harq_rng_;
  std::vector<RngStream> channel_rng_;
  EligibleRing ring_;
  EventCounters counters_;
  std::unique_ptr<GateEngineBase> gate_;
  EventGate* event_gate_ = nullptr;
  bool event_driven_ = false;
  bool any_markov_ = false;
  PfState pf_;
  std::vector<std::vector<std::pair<UeId, int>>> calendar_;
  std::vector<std::pair<UeId, int>> retx_fifo_;  // FIFO by NACK slot, then UE id
  std::size_t retx_head_ = 0;
  std::vector<std::uint8_t> in_retx_;
  std::vector<UeId> harq_freed_;
  std::vector<Bytes> served_this_slot_;
  MetricsReport metrics_;
  SlotRecord record_;
  Observer observer_;
  Slot now_ = 0;
  Bytes total_arrived_ = 0;
  Bytes total_acked_ = 0;
  Bytes total_dropped_ = 0;
  Bytes in_harq_bytes_ = 0;
};

inline void Simulator::init() {
  const SimConfig& c = plan_.config;
  const int n = c.num_ues();
  if (static_cast<int>(plan_.ues.size()) != n) throw ConfigError("run plan has a different UE count than its config");
  ues_.resize(n);
  sources_.reserve(n);
  ring_ = EligibleRing(n);
  for (int u = 0; u < n; ++u) {
    const UeSpec& spec = c.ues[u];
    const UePlan& p = plan_.ues[u];
    UeState& ue = ues_[u];
    ue.id = u;
    ue.cls = p.cls;
    ue.allowance = p.allowance;
    ue.clamp_lo = p.clamp_lo;
    ue.clamp_hi = p.clamp_hi;
    ue.max_tbs = p.max_tbs;
    if (gated() && !(ue.clamp_lo < 0 && 0 < ue.clamp_hi && ue.allowance > 0))
      throw ConfigError("UE " + std::to_string(u) + ": clamps must satisfy lo < 0 < hi with a positive allowance");
    ue.channel.cqi_good = spec.cqi;
    ue.channel.cqi_bad = spec.markov ? spec.cqi_bad : spec.cqi;
    ue.channel.markov = spec.markov;
    ue.channel.p_good_to_bad = spec.p_good_to_bad;
    ue.channel.p_bad_to_good = spec.p_bad_to_good;
    any_markov_ = any_markov_ || spec.markov;
    ue.harq.resize(c.n_harq);
    for (int pid = 0; pid < c.n_harq; ++pid) ue.harq[pid].pid = pid;
    ue.free_harq = c.n_harq;
    sources_.emplace_back(p.payload, plan_.q, c.traffic.mean_on_slots, c.traffic.mean_off_slots,
                          RngStream(c.seed, static_cast<std::uint32_t>(u), RngStream::Purpose::Traffic));
    harq_rng_.emplace_back(c.seed, static_cast<std::uint32_t>(u), RngStream::Purpose::Harq);
    channel_rng_.emplace_back(c.seed, static_cast<std::uint32_t>(u), RngStream::Purpose::Channel);
  }
  event_driven_ = c.engine == GateEngine::EventDriven && gated() && c.scheduler == SchedulerKind::RR && !c.gate_pf_hybrid;
  if (event_driven_) {
    auto g = std::make_unique<EventGate>(ues_, ring_, c.gate, counters_);
    event_gate_ = g.get();
    gate_ = std::move(g);
  } else {
    gate_ = std::make_unique<NaiveGate>(ues_, ring_, c.gate, counters_);
  }
  pf_ = PfState(n, c.pf_beta);
  calendar_.assign(static_cast<std::size_t>(c.harq_rtt_slots + 1), {});
  in_retx_.assign(n, 0);
  served_this_slot_.assign(n, 0);
  metrics_.ue.assign(n, {});
  metrics_.ue_class.resize(n);
  for (int u = 0; u < n; ++u) metrics_.ue_class[u] = plan_.ues[u].cls.id;
  metrics_.warmup_slots = c.warmup_slots;
  metrics_.slot_ms = c.slot_ms;
  metrics_.c_dl = plan_.c_dl;
  metrics_.c_res = plan_.c_res;
  metrics_.offered_bytes_per_slot = plan_.offered_bytes_per_slot;
}

inline void Simulator::release(UeState& ue, HarqProcess& proc) {
  in_harq_bytes_ -= proc.payload_bytes;
  proc.reset();
  ++ue.free_harq;
  harq_freed_.push_back(ue.id);
}

inline void Simulator::settle(UeState& ue, HarqProcess& proc, Slot n, bool ack) {
  const bool counted = n >= plan_.config.warmup_slots;
  for (const auto& seg : proc.segments) {
    Packet& p = packets_[seg.packet];
    --p.open_tbs;
    if (!ack) p.lost = true;
    if (!p.resolved()) continue;
    if (p.lost) {
      ++metrics_.packets_lost;
    } else {
      p.delivered_slot = n;
      if (counted) metrics_.packets.push_back({ue.id, ue.cls.id, p.arrival_slot, n - p.arrival_slot});
    }
  }
  if (ack) {
    total_acked_ += proc.payload_bytes;
    if (counted) metrics_.ue[ue.id].acked_bytes += proc.payload_bytes;
  } else {
    ++metrics_.tb_drops;
    total_dropped_ += proc.payload_bytes;
    if (counted) metrics_.ue[ue.id].dropped_bytes += proc.payload_bytes;
  }
  release(ue, proc);
}

inline void Simulator::enqueue(UeState& ue, Bytes size, Slot n) {
  if (ue.backlog == 0) {
    ++counters_.activations;
    gate_->on_queue_activation(ue, n + 1);
  }
  const auto id = static_cast<std::int64_t>(packets_.size());
  packets_.push_back({ue.id, size, n, size, kNoSlot, false});
  ue.queue.push_back(id);
  ue.backlog += size;
  total_arrived_ += size;
  if (n >= plan_.config.warmup_slots) metrics_.ue[ue.id].arrived_bytes += size;
  if (observer_) record_.arrivals.emplace_back(ue.id, size);
}

inline void Simulator::step() {
  const SimConfig& c = plan_.config;
  const Slot n = now_;
  const bool recording = static_cast<bool>(observer_);
  const std::uint64_t touched_before = counters_.touched;
  if (n == c.warmup_slots) metrics_.counters_at_warmup = counters_;
  if (recording) {
    record_.reset(n);
    if (gated()) {
      record_.credits.resize(ues_.size());
      for (const auto& ue : ues_) record_.credits[ue.id] = gate_->credit_at(ue, n);
    }
  }

  if (any_markov_)
    for (auto& ue : ues_) ue.channel.step(channel_rng_[ue.id]);

  // (0) HARQ feedback due this slot
  harq_freed_.clear();
  auto& due = calendar_[static_cast<std::size_t>(n % calendar_.size())];
  std::vector<std::pair<UeId, int>> nacks;
  for (const auto& [u, pid] : due) {
    UeState& ue = ues_[u];
    HarqProcess& proc = ue.harq[pid];
    const bool error = draw_block_error(harq_rng_[u], proc.attempts, c.bler_new, c.bler_retx);
    ++metrics_.tb_feedbacks;
    if (proc.attempts == 1) {
      ++metrics_.first_tx_feedbacks;
      if (error) ++metrics_.first_tx_nacks;
    }
    switch (on_feedback(proc, !error, n, c.max_retx)) {
      case FeedbackOutcome::Ack: settle(ue, proc, n, true); break;
      case FeedbackOutcome::Drop: settle(ue, proc, n, false); break;
      case FeedbackOutcome::Retx: nacks.emplace_back(u, pid); break;
    }
  }
  due.clear();
  std::sort(nacks.begin(), nacks.end());
  retx_fifo_.insert(retx_fifo_.end(), nacks.begin(), nacks.end());

  gate_->on_slot_start(n, harq_freed_);

  // (i) retransmissions first, strict FIFO
  int used_rbs = 0;
  std::vector<UeId> retx_ues;
  while (retx_head_ < retx_fifo_.size()) {
    const auto [u, pid] = retx_fifo_[retx_head_];
    HarqProcess& proc = ues_[u].harq[pid];
    if (used_rbs + proc.rbs > c.rb_budget) break;
    ++retx_head_;
    used_rbs += proc.rbs;
    proc.state = HarqState::InFlight;
    proc.tx_slot = n;
    ++proc.attempts;
    schedule_feedback(u, pid, n);
    ++metrics_.retx_grants;
    if (!in_retx_[u]) retx_ues.push_back(u);
    in_retx_[u] = 1;
    if (recording) record_.grants.push_back({u, true, proc.rbs, 0, proc.tb_bytes, 0, pid});
  }
  if (retx_head_ > 4096 && retx_head_ * 2 > retx_fifo_.size()) {
    retx_fifo_.erase(retx_fifo_.begin(), retx_fifo_.begin() + static_cast<std::ptrdiff_t>(retx_head_));
    retx_head_ = 0;
  }
  const int residual = c.rb_budget - used_rbs;
  const int capacity = std::min(c.grant_cap, residual / c.rbg_size);

  // (ii)-(iii) eligibility and selection
  std::vector<UeId> selected;
  const auto skip_retx = [&](UeId u) { return in_retx_[u] != 0; };
  if (c.scheduler == SchedulerKind::RR && !c.gate_pf_hybrid) {
    if (recording) {
      for (UeId u : ring_.members())
        if (!in_retx_[u]) record_.eligible.push_back(u);
    }
    selected = ring_.select(capacity, skip_retx);
  } else {
    std::vector<PfCandidate> cands;
    for (const auto& ue : ues_) {
      const MacView view{ue.backlog, ue.has_free_harq(), in_retx_[ue.id] != 0, gate_->credit_at(ue, n)};
      const bool ok = c.gate_pf_hybrid ? is_gate_eligible(view) : is_mac_eligible(view);
      if (!ok) continue;
      const double rate = static_cast<double>(tbs_lookup(mcs_for_cqi(ue.cqi()), residual, plan_.phy));
      const double weight = c.scheduler == SchedulerKind::WPF ? ue.cls.idle_slope_share : 1.0;
      cands.push_back({ue.id, rate, weight});
      if (recording) record_.eligible.push_back(ue.id);
    }
    selected = weighted_pf_select(std::move(cands), pf_, capacity);
  }

  std::vector<AllocRequest> requests;
  requests.reserve(selected.size());
  for (UeId u : selected) requests.push_back({u, mcs_for_cqi(ues_[u].cqi()), ues_[u].backlog});
  const auto grants = allocate_rbs(requests, residual, plan_.phy, c.rbg_size);

  // (iv) service of new grants
  std::vector<GrantOutcome> outcomes;
  outcomes.reserve(grants.size());
  int new_rbs = 0;
  for (const auto& g : grants) {
    UeState& ue = ues_[g.ue];
    gate_->before_service(ue, n);
    const int pid = ue.first_free_harq();
    if (pid < 0) throw InvariantError(n, "new grant to UE " + std::to_string(g.ue) + " without a free HARQ process");
    if (in_retx_[g.ue]) throw InvariantError(n, "new grant to UE " + std::to_string(g.ue) + " already in ReTxSet");
    HarqProcess& proc = ue.harq[pid];
    const Bytes before = ue.backlog;
    const ServeResult sr = serve_queue(ue, packets_, g.tbs, &proc.segments);
    proc.state = HarqState::InFlight;
    proc.tb_bytes = g.tbs;
    proc.payload_bytes = sr.served;
    proc.attempts = 1;
    proc.rbs = g.rbs;
    proc.tx_slot = n;
    --ue.free_harq;
    in_harq_bytes_ += sr.served;
    schedule_feedback(g.ue, pid, n);
    new_rbs += g.rbs;
    ++counters_.new_grants;
    served_this_slot_[g.ue] = sr.served;
    if (n >= c.warmup_slots) {
      auto& m = metrics_.ue[g.ue];
      m.served_bytes += sr.served;
      m.tbs_bytes += g.tbs;
      ++m.new_grants;
    }
    outcomes.push_back({g.ue, g.tbs, before});
    if (recording) record_.grants.push_back({g.ue, false, g.rbs, g.mcs, g.tbs, sr.served, pid});
  }
  if (used_rbs + new_rbs > c.rb_budget) throw InvariantError(n, "RB budget exceeded");
  if (static_cast<int>(grants.size()) > c.grant_cap) throw InvariantError(n, "new-grant cap exceeded");

  // (v) credit update
  gate_->after_grants(n, outcomes);

  if (c.scheduler != SchedulerKind::RR || c.gate_pf_hybrid) pf_.update(served_this_slot_);
  for (const auto& g : grants) served_this_slot_[g.ue] = 0;

  // arrivals of slot n feed Q[n+1]
  for (auto& ue : ues_) {
    if (auto pkt = sources_[ue.id].step()) enqueue(ue, *pkt, n);
  }
  if (c.traffic.saturate) {
    for (auto& ue : ues_)
      if (ue.backlog < ue.max_tbs) enqueue(ue, 2 * ue.max_tbs, n);
  }

  for (UeId u : retx_ues) in_retx_[u] = 0;
  if (event_gate_) event_gate_->finish_slot();
  counters_.ring_ops = ring_.ops();
  ++counters_.slots;
  if (recording) {
    record_.retx_ues = std::move(retx_ues);
    record_.grant_capacity = capacity;
    record_.touched = counters_.touched - touched_before;
    observer_(record_);
  }
  ++now_;
}

}  // namespace cbsnr
