// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "cbsnr/common.hpp"
#include "cbsnr/rng.hpp"

namespace cbsnr {

/// ON/OFF packet source with geometric dwell times. While ON it emits one
/// packet of `payload` bytes per slot with probability q.
class OnOffSource {
 public:
  OnOffSource() = default;
  OnOffSource(Bytes payload, double q, double mean_on_slots, double mean_off_slots, RngStream rng)
      : payload_(payload), q_(q), mean_on_(mean_on_slots), mean_off_(mean_off_slots), rng_(rng) {
    if (mean_off_ <= 0.0) {
      on_ = true;
    } else if (mean_on_ <= 0.0) {
      on_ = false;
    } else {
      on_ = rng_.bernoulli(duty_cycle());
    }
  }

  /// Stationary probability of the ON state.
  static double stationary_on(double mean_on, double mean_off) {
    if (mean_off <= 0.0) return 1.0;
    if (mean_on <= 0.0) return 0.0;
    return mean_on / (mean_on + mean_off);
  }

  double duty_cycle() const { return stationary_on(mean_on_, mean_off_); }

  /// Long-run mean offered bytes per slot.
  double mean_rate() const { return q_ * duty_cycle() * static_cast<double>(payload_); }

  /// Bytes of the packet emitted this slot, if any.
  std::optional<Bytes> step() {
    std::optional<Bytes> out;
    if (on_ && q_ > 0.0 && rng_.bernoulli(q_)) out = payload_;
    if (on_) {
      if (mean_off_ > 0.0 && rng_.bernoulli(1.0 / std::max(mean_on_, 1.0))) on_ = false;
    } else if (mean_on_ > 0.0 && rng_.bernoulli(1.0 / std::max(mean_off_, 1.0))) {
      on_ = true;
    }
    return out;
  }

  bool is_on() const { return on_; }
  Bytes payload() const { return payload_; }
  double q() const { return q_; }

 private:
  Bytes payload_ = 1;
  double q_ = 0.0;
  double mean_on_ = 1.0;
  double mean_off_ = 0.0;
  bool on_ = true;
  RngStream rng_;
};

/// Result of fitting the offered load to a target normalized load.
struct LoadScaling {
  double q = 0.0;              // per-slot emission probability while ON (all UEs)
  double payload_factor = 1.0; // multiplier applied to every payload
  std::vector<Bytes> payloads; // scaled payloads, one per UE
  double offered_bytes_per_slot = 0.0;
};

/// Scales the emission probability uniformly so that offered load equals
/// target_rho * capacity. If that needs q > 1 the payloads are scaled
/// instead when allowed, otherwise the target is rejected.
inline LoadScaling calibrate_load(const std::vector<Bytes>& payloads, double duty, double q_nominal,
                                  double capacity_bytes_per_slot, double target_rho,
                                  bool allow_payload_scaling) {
  if (payloads.empty()) throw ConfigError("calibrate_load: no UEs");
  if (!(capacity_bytes_per_slot > 0.0)) throw ConfigError("calibrate_load: measured capacity must be positive");
  if (!(target_rho > 0.0)) throw ConfigError("traffic.target_rho must be positive");
  double sum_payload = 0.0;
  for (Bytes s : payloads) sum_payload += static_cast<double>(s);
  const double target = target_rho * capacity_bytes_per_slot;
  const double nominal = q_nominal * duty * sum_payload;

  LoadScaling out;
  out.payloads = payloads;
  out.q = q_nominal * target / nominal;
  if (out.q > 1.0) {
    if (!allow_payload_scaling) {
      throw ConfigError("traffic.target_rho=" + std::to_string(target_rho) +
                        " needs emission probability " + std::to_string(out.q) +
                        " > 1; enable traffic.scale_payload_on_overload or raise payload sizes");
    }
    out.payload_factor = target / nominal;
    double scaled_sum = 0.0;
    for (auto& s : out.payloads) {
      s = std::max<Bytes>(1, std::llround(static_cast<double>(s) * out.payload_factor));
      scaled_sum += static_cast<double>(s);
    }
    out.q = std::min(1.0, target / (duty * scaled_sum));
  }
  double sum = 0.0;
  for (Bytes s : out.payloads) sum += static_cast<double>(s);
  out.offered_bytes_per_slot = out.q * duty * sum;
  return out;
}

}  // namespace cbsnr
