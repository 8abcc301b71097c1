// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cbsnr/common.hpp"
#include "cbsnr/rng.hpp"

namespace cbsnr {

inline constexpr int kNumMcs = 15;

/// Bytes carried per resource block at each MCS index (1-based).
class PhyTable {
 public:
  PhyTable() : bytes_per_rb_{3, 4, 6, 8, 10, 12, 15, 18, 21, 24, 28, 32, 36, 42, 48} {}

  explicit PhyTable(const std::array<Bytes, kNumMcs>& entries) : bytes_per_rb_(entries) {
    validate();
  }

  /// One positive integer per line, MCS 1 first. Blank lines and '#' comments are skipped.
  static PhyTable load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("phy_table: cannot open file '" + path + "'");
    std::array<Bytes, kNumMcs> entries{};
    int n = 0;
    std::string line;
    while (std::getline(in, line)) {
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      std::istringstream ls(line);
      Bytes v = 0;
      if (!(ls >> v)) continue;
      if (n >= kNumMcs) throw ConfigError("phy_table: '" + path + "' has more than 15 entries");
      entries[n++] = v;
    }
    if (n != kNumMcs)
      throw ConfigError("phy_table: '" + path + "' has " + std::to_string(n) + " entries, expected 15");
    return PhyTable(entries);
  }

  Bytes bytes_per_rb(int mcs) const {
    if (mcs < 1 || mcs > kNumMcs) throw ConfigError("mcs " + std::to_string(mcs) + " out of range [1,15]");
    return bytes_per_rb_[mcs - 1];
  }

  const std::array<Bytes, kNumMcs>& entries() const { return bytes_per_rb_; }

 private:
  void validate() const {
    for (int i = 0; i < kNumMcs; ++i) {
      if (bytes_per_rb_[i] <= 0) throw ConfigError("phy_table: entries must be positive");
      if (i > 0 && bytes_per_rb_[i] < bytes_per_rb_[i - 1])
        throw ConfigError("phy_table: entries must be non-decreasing in MCS");
    }
  }

  std::array<Bytes, kNumMcs> bytes_per_rb_;
};

inline Bytes tbs_lookup(int mcs, int rbs, const PhyTable& table) {
  const Bytes per_rb = table.bytes_per_rb(mcs);
  return rbs <= 0 ? 0 : per_rb * rbs;
}

// CQI indexes the MCS table directly.
constexpr int mcs_for_cqi(int cqi) { return cqi; }

/// true means the transport block failed (NACK). Exactly one draw per call.
inline bool draw_block_error(RngStream& rng, int attempt, double bler_new, double bler_retx) {
  const double p = attempt <= 1 ? bler_new : bler_retx;
  return rng.bernoulli(p);
}

enum class HarqState { Free, InFlight, AwaitRetx };

/// Part of a packet carried in a transport block.
struct TbSegment {
  std::int64_t packet = 0;
  Bytes bytes = 0;
  bool final = false;  // the packet's last byte rides this TB
};

struct HarqProcess {
  int pid = 0;
  HarqState state = HarqState::Free;
  Bytes tb_bytes = 0;       // granted TBS
  Bytes payload_bytes = 0;  // queue bytes packed into the TB
  std::vector<TbSegment> segments;
  int attempts = 0;
  int rbs = 0;
  Slot tx_slot = kNoSlot;
  Slot nack_slot = kNoSlot;

  void reset() {
    state = HarqState::Free;
    tb_bytes = 0;
    payload_bytes = 0;
    segments.clear();
    attempts = 0;
    rbs = 0;
    tx_slot = kNoSlot;
    nack_slot = kNoSlot;
  }
};

enum class FeedbackOutcome { Ack, Retx, Drop };

/// Applies one feedback result to an in-flight process. Freeing and
/// delivery bookkeeping are left to the caller, which owns the packets.
inline FeedbackOutcome on_feedback(HarqProcess& proc, bool ack, Slot now, int max_retx) {
  if (proc.state != HarqState::InFlight)
    throw InvariantError(now, "HARQ feedback for process " + std::to_string(proc.pid) + " that is not in flight");
  if (ack) return FeedbackOutcome::Ack;
  if (proc.attempts >= max_retx + 1) return FeedbackOutcome::Drop;
  proc.state = HarqState::AwaitRetx;
  proc.nack_slot = now;
  return FeedbackOutcome::Retx;
}

/// Per-UE channel quality. Fixed by default; optionally a two-state
/// good/bad Markov chain stepped once per slot.
struct ChannelModel {
  int cqi_good = 15;
  int cqi_bad = 15;
  double p_good_to_bad = 0.0;
  double p_bad_to_good = 0.0;
  bool markov = false;
  bool bad = false;

  int cqi() const { return bad ? cqi_bad : cqi_good; }
  int best_cqi() const { return markov ? std::max(cqi_good, cqi_bad) : cqi_good; }

  void step(RngStream& rng) {
    if (!markov) return;
    bad = bad ? !rng.bernoulli(p_bad_to_good) : rng.bernoulli(p_good_to_bad);
  }
};

}  // namespace cbsnr
