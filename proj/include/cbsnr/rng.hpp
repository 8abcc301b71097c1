// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

namespace cbsnr {

/// Independent, reproducible random stream. Streams are keyed by
/// (run seed, UE, purpose) so per-UE draws never depend on the order in
/// which other UEs consume randomness.
class RngStream {
 public:
  enum class Purpose : std::uint32_t { Traffic = 1, Harq = 2, Channel = 3, Calibration = 4 };

  RngStream() : RngStream(0, 0, Purpose::Traffic) {}
  RngStream(std::uint64_t seed, std::uint32_t ue, Purpose purpose) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), ue,
                      static_cast<std::uint32_t>(purpose)};
    engine_.seed(seq);
  }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() {
    ++draws_;
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t draws() const { return draws_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t draws_ = 0;
};

}  // namespace cbsnr
