// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cbsnr/common.hpp"
#include "cbsnr/simulator.hpp"

namespace cbsnr {

/// Slots needed to climb from -deficit back to zero.
constexpr Slot eligibility_bound(Bytes deficit, Bytes allowance) {
  return deficit <= 0 ? 0 : ceil_div(deficit, allowance);
}

/// RR over at most e_max eligible UEs with k new grants per slot.
constexpr Slot first_service_bound(int e_max, int k) { return e_max <= 0 ? 0 : ceil_div(e_max, k); }

/// Re-eligibility after a grant: the post-grant deficit is at most min(-lo, d_max).
constexpr Slot reelig_bound(Bytes lo, Bytes d_max, Bytes allowance) {
  return eligibility_bound(std::min<Bytes>(-lo, d_max), allowance);
}

struct UeBounds {
  UeId ue = 0;
  Bytes lo = 0;
  Bytes allowance = 1;
  Bytes d_max = 0;
  Slot w_elig_max = 0;
  Slot w_queue_max = 0;
  Slot w_svc_max = 0;
  Slot w_reelig_max = 0;
  Slot w_cycle_max = 0;
  Slot t_rec_max = 0;
};

struct BoundSet {
  int e_max = 0;
  int k = 1;
  std::vector<UeBounds> ue;

  static BoundSet make(const std::vector<UePlan>& plans, int e_max, int k) {
    BoundSet b;
    b.e_max = e_max;
    b.k = k;
    for (std::size_t u = 0; u < plans.size(); ++u) {
      const auto& p = plans[u];
      UeBounds x;
      x.ue = static_cast<UeId>(u);
      x.lo = p.clamp_lo;
      x.allowance = p.allowance;
      x.d_max = p.max_tbs;
      x.w_elig_max = eligibility_bound(-p.clamp_lo, p.allowance);
      x.t_rec_max = x.w_elig_max;
      x.w_queue_max = first_service_bound(e_max, k);
      x.w_svc_max = x.w_elig_max + x.w_queue_max;
      x.w_reelig_max = reelig_bound(p.clamp_lo, p.max_tbs, p.allowance);
      x.w_cycle_max = x.w_reelig_max + x.w_queue_max;
      b.ue.push_back(x);
    }
    return b;
  }
};

struct Violation {
  std::string kind;  // w_elig, w_queue, w_reelig, ineligible_grant
  UeId ue = 0;
  Slot start = 0;
  Slot measured = 0;
  Slot bound = 0;
};

struct AuditReport {
  std::vector<Violation> violations;
  std::vector<std::string> warnings;
  int e_max_measured = 0;
  int e_max_used = 0;
  std::uint64_t elig_checked = 0;
  std::uint64_t queue_checked = 0;
  std::uint64_t reelig_checked = 0;
  std::uint64_t open_at_end = 0;
  std::vector<Slot> max_elig_wait;
  std::vector<Slot> max_queue_wait;
  std::vector<Slot> max_reelig_wait;
  BoundSet bounds;

  bool ok() const { return violations.empty(); }
};

/// Streaming Lemma-2 audit over per-slot records of a gated run.
///
/// W_elig: a packet that arrives in slot n enters the queue for slot n+1; if
/// C[n+1] < 0 the wait runs until the first slot with C >= 0.
/// W_queue|elig: slots with full new-grant capacity that the UE spends in E
/// before the slot of its grant. Leaving E without a grant restarts the count.
/// E_max counts the other UEs holding C >= 0 with data still queued, whatever
/// their HARQ state: a UE waiting on a retransmission keeps its RR position.
/// Backlog is rebuilt from arrivals and served bytes.
/// W_reelig: from C[n*+1] < 0 after a grant at n* to the first C >= 0.
class Auditor {
 public:
  Auditor(std::vector<UePlan> plans, int k, std::optional<int> e_max, bool rr_gated, bool credit_gated)
      : plans_(std::move(plans)), k_(k), e_max_cfg_(e_max), rr_(rr_gated), gated_(credit_gated) {
    const std::size_t n = plans_.size();
    deficit_arrivals_.resize(n);
    backlog_.assign(n, 0);
    reelig_open_.assign(n, kNoSlot);
    queue_wait_.assign(n, 0);
    queue_start_.assign(n, 0);
    in_e_.assign(n, 0);
    granted_prev_.assign(n, 0);
    report_.max_elig_wait.assign(n, 0);
    report_.max_queue_wait.assign(n, 0);
    report_.max_reelig_wait.assign(n, 0);
    if (!gated_) report_.warnings.push_back("no credit gate: credit bounds do not apply");
    if (!rr_) report_.warnings.push_back("scheduler is not RR over the gated set: the ceil(E_max/K) bound does not apply");
  }

  void observe(const SlotRecord& r) {
    const std::size_t n = plans_.size();
    if (gated_ && r.credits.size() == n) {
      int waiting = 0;
      for (std::size_t u = 0; u < n; ++u) waiting += r.credits[u] >= 0 && backlog_[u] > 0;
      report_.e_max_measured = std::max(report_.e_max_measured, waiting - 1);
      observe_credits(r);
    } else {
      report_.e_max_measured = std::max(report_.e_max_measured, static_cast<int>(r.eligible.size()) - 1);
    }

    std::fill(granted_now_.begin(), granted_now_.end(), 0);
    granted_now_.resize(n, 0);
    for (const auto& g : r.grants) {
      if (g.retx) continue;
      granted_now_[g.ue] = 1;
      backlog_[g.ue] -= g.served;
      if (gated_ && r.credits.size() == n && r.credits[g.ue] < 0)
        report_.violations.push_back({"ineligible_grant", g.ue, r.slot, r.credits[g.ue], 0});
      if (rr_ && gated_ && std::find(r.eligible.begin(), r.eligible.end(), g.ue) == r.eligible.end())
        report_.violations.push_back({"ineligible_grant", g.ue, r.slot, 0, 0});
    }

    if (rr_) observe_queue(r);

    for (const auto& [u, bytes] : r.arrivals) {
      backlog_[u] += bytes;
      pending_arrival_.push_back(u);
    }
    granted_prev_ = granted_now_;
    prev_slot_ = r.slot;
  }

  AuditReport finish() {
    const int e_max = e_max_cfg_ ? *e_max_cfg_ : std::max(0, report_.e_max_measured);
    report_.e_max_used = e_max;
    report_.bounds = BoundSet::make(plans_, e_max, k_);
    if (rr_) {
      for (const auto& [u, start, wait] : queue_samples_) {
        const Slot bound = report_.bounds.ue[u].w_queue_max;
        ++report_.queue_checked;
        report_.max_queue_wait[u] = std::max(report_.max_queue_wait[u], wait);
        if (wait > bound) report_.violations.push_back({"w_queue", u, start, wait, bound});
      }
    }
    for (std::size_t u = 0; u < plans_.size(); ++u) {
      report_.open_at_end += deficit_arrivals_[u].size();
      if (reelig_open_[u] != kNoSlot) ++report_.open_at_end;
      if (in_e_[u]) ++report_.open_at_end;
    }
    std::sort(report_.violations.begin(), report_.violations.end(),
              [](const Violation& a, const Violation& b) { return a.start != b.start ? a.start < b.start : a.ue < b.ue; });
    return report_;
  }

 private:
  void observe_credits(const SlotRecord& r) {
    const Slot n = r.slot;
    // packets that arrived last slot see C[n]
    for (UeId u : pending_arrival_) {
      if (r.credits[u] < 0 && prev_slot_ == n - 1)
        deficit_arrivals_[u].push_back({n, eligibility_bound(-r.credits[u], plans_[u].allowance)});
    }
    pending_arrival_.clear();
    for (std::size_t i = 0; i < plans_.size(); ++i) {
      const auto u = static_cast<UeId>(i);
      const Bytes c = r.credits[u];
      if (granted_prev_.size() == plans_.size() && granted_prev_[u] && c < 0 && prev_slot_ == n - 1)
        reelig_open_[u] = n;
      if (c < 0) continue;
      for (const auto& [start, bound] : deficit_arrivals_[u]) {
        const Slot wait = n - start;
        ++report_.elig_checked;
        report_.max_elig_wait[u] = std::max(report_.max_elig_wait[u], wait);
        const Slot worst = eligibility_bound(-plans_[u].clamp_lo, plans_[u].allowance);
        if (wait > bound || wait > worst) report_.violations.push_back({"w_elig", u, start, wait, std::min(bound, worst)});
      }
      deficit_arrivals_[u].clear();
      if (reelig_open_[u] != kNoSlot) {
        const Slot wait = n - reelig_open_[u];
        const Slot bound = reelig_bound(plans_[u].clamp_lo, plans_[u].max_tbs, plans_[u].allowance);
        ++report_.reelig_checked;
        report_.max_reelig_wait[u] = std::max(report_.max_reelig_wait[u], wait);
        if (wait > bound) report_.violations.push_back({"w_reelig", u, reelig_open_[u], wait, bound});
        reelig_open_[u] = kNoSlot;
      }
    }
  }

  void observe_queue(const SlotRecord& r) {
    const std::size_t n = plans_.size();
    in_now_.assign(n, 0);
    for (UeId u : r.eligible) in_now_[u] = 1;
    const bool full = r.grant_capacity >= k_;
    for (std::size_t i = 0; i < n; ++i) {
      const auto u = static_cast<UeId>(i);
      if (!in_now_[u]) {
        if (in_e_[u] && !granted_now_[u]) queue_wait_[u] = 0;  // left E without a grant
        in_e_[u] = 0;
        continue;
      }
      if (!in_e_[u]) {
        in_e_[u] = 1;
        queue_start_[u] = r.slot;
        queue_wait_[u] = 0;
      }
      if (granted_now_[u]) {
        queue_samples_.push_back({u, queue_start_[u], queue_wait_[u]});
        queue_wait_[u] = 0;
        queue_start_[u] = r.slot + 1;
      } else if (full) {
        ++queue_wait_[u];
      }
    }
  }

  struct QueueSample {
    UeId ue;
    Slot start;
    Slot wait;
  };

  std::vector<UePlan> plans_;
  int k_;
  std::optional<int> e_max_cfg_;
  bool rr_;
  bool gated_;
  AuditReport report_;
  Slot prev_slot_ = kNoSlot;
  std::vector<UeId> pending_arrival_;
  std::vector<std::vector<std::pair<Slot, Slot>>> deficit_arrivals_;
  std::vector<Slot> reelig_open_;
  std::vector<Bytes> backlog_;
  std::vector<Slot> queue_wait_;
  std::vector<Slot> queue_start_;
  std::vector<std::uint8_t> in_e_;
  std::vector<std::uint8_t> in_now_;
  std::vector<std::uint8_t> granted_now_;
  std::vector<std::uint8_t> granted_prev_;
  std::vector<QueueSample> queue_samples_;
};

inline nlohmann::json audit_to_json(const AuditReport& r) {
  nlohmann::json j;
  j["ok"] = r.ok();
  j["e_max_measured"] = r.e_max_measured;
  j["e_max_used"] = r.e_max_used;
  j["checked"] = {{"w_elig", r.elig_checked}, {"w_queue", r.queue_checked}, {"w_reelig", r.reelig_checked}};
  j["open_at_end"] = r.open_at_end;
  j["warnings"] = r.warnings;
  j["violations"] = nlohmann::json::array();
  for (const auto& v : r.violations)
    j["violations"].push_back({{"kind", v.kind}, {"ue", v.ue}, {"slot", v.start}, {"measured", v.measured}, {"bound", v.bound}});
  j["bounds"] = nlohmann::json::array();
  for (const auto& b : r.bounds.ue) {
    const auto u = static_cast<std::size_t>(b.ue);
    j["bounds"].push_back({{"ue", b.ue},
                           {"lo", b.lo},
                           {"allowance", b.allowance},
                           {"d_max", b.d_max},
                           {"w_elig_max", b.w_elig_max},
                           {"w_queue_max", b.w_queue_max},
                           {"w_svc_max", b.w_svc_max},
                           {"w_reelig_max", b.w_reelig_max},
                           {"w_cycle_max", b.w_cycle_max},
                           {"t_rec_max", b.t_rec_max},
                           {"measured_w_elig", u < r.max_elig_wait.size() ? r.max_elig_wait[u] : 0},
                           {"measured_w_queue", u < r.max_queue_wait.size() ? r.max_queue_wait[u] : 0},
                           {"measured_w_reelig", u < r.max_reelig_wait.size() ? r.max_reelig_wait[u] : 0}});
  }
  return j;
}

}  // namespace cbsnr
