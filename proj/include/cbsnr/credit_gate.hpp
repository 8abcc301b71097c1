// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <utility>

#include "cbsnr/common.hpp"

namespace cbsnr {

enum class DebitVariant { DT, PU };

/// Per-slot allowance in bytes: share * rate * slot, rounded, at least one byte.
inline Bytes derive_allowance(double share, double link_rate_bytes_per_s, double slot_ms) {
  if (!(share > 0.0)) throw ConfigError("idle_slope_share must be positive");
  if (!(link_rate_bytes_per_s > 0.0)) throw ConfigError("reference link rate must be positive");
  const auto v = static_cast<Bytes>(std::llround(share * link_rate_bytes_per_s * slot_ms / 1000.0));
  return std::max<Bytes>(v, 1);
}

inline Bytes derive_allowance(const PriorityClass& cls, double link_rate_bytes_per_s,
                              double slot_ms) {
  return derive_allowance(cls.idle_slope_share, link_rate_bytes_per_s, slot_ms);
}

struct CreditClamps {
  Bytes lo = -1;
  Bytes hi = 1;
};

/// hi holds `burst_factor` max-payload bursts worth of accrual, lo admits one
/// maximum-size transport block of deficit.
inline CreditClamps derive_clamps(const PriorityClass& cls, Bytes allowance, Bytes max_tbs,
                                  int burst_factor = 2) {
  if (allowance <= 0 || max_tbs <= 0) throw ConfigError("derive_clamps: allowance and max_tbs must be positive");
  const Bytes burst_slots = burst_factor * ceil_div(cls.payload_bytes, allowance);
  return CreditClamps{-max_tbs, std::max<Bytes>(burst_slots, 1) * allowance};
}

// Accumulate / recover / reset before the debit. The reset branch also covers
// credit == 0 with an empty queue, so an idle UE parks at zero instead of
// oscillating between 0 and the allowance.
constexpr Bytes pre_debit_update(Bytes credit, Bytes allowance, Bytes backlog) {
  if (credit < 0) return std::min<Bytes>(credit + allowance, 0);
  if (backlog == 0) return 0;
  return credit + allowance;
}

constexpr Bytes compute_debit(DebitVariant variant, bool granted, Bytes tbs, Bytes backlog) {
  if (!granted) return 0;
  if (variant == DebitVariant::DT) return tbs;
  return std::min(tbs, backlog);
}

constexpr Bytes clamp_credit(Bytes x, Bytes lo, Bytes hi) { return std::min(std::max(x, lo), hi); }

struct CreditUpdateInput {
  Bytes credit_in = 0;
  Bytes backlog = 0;  // Q_u[n], before this slot's service
  Bytes allowance = 1;
  bool granted = false;
  Bytes tbs = 0;
  Bytes lo = -1;
  Bytes hi = 1;
};

/// One slot of the credit recursion: clamp(f(C, dC, Q) - D).
constexpr Bytes slot_update(const CreditUpdateInput& in, DebitVariant variant) {
  const Bytes pre = pre_debit_update(in.credit_in, in.allowance, in.backlog);
  const Bytes debit = compute_debit(variant, in.granted, in.tbs, in.backlog);
  return clamp_credit(pre - debit, in.lo, in.hi);
}

/// The MAC-side facts the gate needs about one UE.
struct MacView {
  Bytes backlog = 0;
  bool free_harq = false;
  bool in_retx = false;
  Bytes credit = 0;
};

constexpr bool is_mac_eligible(const MacView& ue) {
  return ue.backlog > 0 && ue.free_harq && !ue.in_retx;
}

constexpr bool is_gate_eligible(const MacView& ue) { return is_mac_eligible(ue) && ue.credit >= 0; }

/// Credit after `steps` slots with no grant, for a UE whose backlog status
/// does not change over the interval. Closed form of iterating slot_update.
constexpr Bytes accrue_without_grant(Bytes credit, Bytes allowance, Bytes hi, bool backlogged,
                                     Slot steps) {
  if (steps <= 0) return credit;
  if (credit < 0) {
    const Slot to_zero = ceil_div(-credit, allowance);
    if (steps < to_zero) return credit + steps * allowance;
    credit = 0;
    steps -= to_zero;
    if (steps == 0) return 0;
  }
  if (!backlogged) return 0;
  // saturate before multiplying so long idle spans cannot overflow
  const Slot needed = ceil_div(hi - credit, allowance);
  if (steps >= needed) return hi;
  return std::min(credit + steps * allowance, hi);
}

}  // namespace cbsnr
