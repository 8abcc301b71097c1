// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "cbsnr/common.hpp"
#include "cbsnr/phy.hpp"
#include "cbsnr/ring.hpp"

namespace cbsnr {

inline std::vector<UeId> rr_select(EligibleRing& ring, int k) { return ring.select(k); }

/// Proportional-fair bookkeeping: EWMA of served bytes per slot.
class PfState {
 public:
  static constexpr double kFloor = 1e-6;

  explicit PfState(int num_ues = 0, double beta = 0.01, double initial = 1.0)
      : avg_(num_ues, initial), beta_(beta) {}

  double average(UeId u) const { return std::max(avg_[u], kFloor); }
  void set_average(UeId u, double v) { avg_[u] = v; }
  double beta() const { return beta_; }

  /// served[u] is the new-transmission bytes delivered to u this slot.
  void update(std::span<const Bytes> served) {
    for (std::size_t u = 0; u < avg_.size(); ++u)
      avg_[u] = (1.0 - beta_) * avg_[u] + beta_ * static_cast<double>(served[u]);
  }

 private:
  std::vector<double> avg_;
  double beta_;
};

struct PfCandidate {
  UeId ue = 0;
  double rate = 0.0;    // instantaneous estimate r_i, bytes/slot
  double weight = 1.0;  // 1 for PF, class share for WPF
};

/// Top-k by weight * r / avg. Ties go to the lower UE id.
inline std::vector<UeId> weighted_pf_select(std::vector<PfCandidate> candidates, const PfState& pf, int k) {
  std::vector<std::pair<double, UeId>> scored;
  scored.reserve(candidates.size());
  for (const auto& c : candidates) scored.emplace_back(c.weight * c.rate / pf.average(c.ue), c.ue);
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<UeId> out;
  for (int i = 0; i < k && i < static_cast<int>(scored.size()); ++i) out.push_back(scored[i].second);
  return out;
}

inline std::vector<UeId> pf_select(std::vector<PfCandidate> candidates, const PfState& pf, int k) {
  for (auto& c : candidates) c.weight = 1.0;
  return weighted_pf_select(std::move(candidates), pf, k);
}

inline std::vector<UeId> wpf_select(std::vector<PfCandidate> candidates, const PfState& pf, int k) {
  return weighted_pf_select(std::move(candidates), pf, k);
}

/// What the allocator needs to know about a selected UE.
struct AllocRequest {
  UeId ue = 0;
  int mcs = 1;
  Bytes backlog = 0;
};

struct NewGrant {
  UeId ue = 0;
  int rbs = 0;
  int mcs = 1;
  Bytes tbs = 0;
};

/// Splits the residual budget evenly (in RBG units) among the selected UEs,
/// earlier-selected UEs taking the remainder. Each share is then trimmed to
/// the RBGs needed to carry the UE's backlog; trimmed RBGs stay unused.
/// UEs whose allocation carries zero bytes get no grant.
inline std::vector<NewGrant> allocate_rbs(std::span<const AllocRequest> selected, int residual_rbs,
                                          const PhyTable& table, int rbg_size = 1) {
  std::vector<NewGrant> out;
  if (selected.empty() || residual_rbs <= 0) return out;
  const int units = residual_rbs / rbg_size;
  const int m = static_cast<int>(selected.size());
  const int base = units / m;
  const int rem = units % m;
  for (int i = 0; i < m; ++i) {
    const auto& req = selected[i];
    int share = base + (i < rem ? 1 : 0);
    const Bytes per_rb = table.bytes_per_rb(req.mcs);
    const Bytes needed_rbs = ceil_div(std::max<Bytes>(req.backlog, 0), per_rb);
    const int needed_units = static_cast<int>(ceil_div(needed_rbs, rbg_size));
    share = std::min(share, needed_units);
    const int rbs = share * rbg_size;
    const Bytes tbs = tbs_lookup(req.mcs, rbs, table);
    if (tbs <= 0) continue;
    out.push_back({req.ue, rbs, req.mcs, tbs});
  }
  return out;
}

}  // namespace cbsnr
