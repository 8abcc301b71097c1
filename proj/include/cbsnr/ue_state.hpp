// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "cbsnr/common.hpp"
#include "cbsnr/phy.hpp"

namespace cbsnr {

struct Packet {
  UeId ue = 0;
  Bytes size = 0;
  Slot arrival_slot = 0;
  Bytes remaining = 0;  // bytes not yet packed into a new TB
  Slot delivered_slot = kNoSlot;
  bool lost = false;  // some byte rode a TB that exhausted its retransmissions
  int open_tbs = 0;   // TBs carrying part of this packet with no final outcome yet

  bool resolved() const { return remaining == 0 && open_tbs == 0; }
};

/// Where the event-driven gate currently keeps a UE.
enum class Membership : std::uint8_t {
  Idle,    // empty queue
  Ring,    // eligible for a new grant
  Heap,    // backlogged, in deficit, waiting for its wake-up slot
  Parked,  // backlogged, credit >= 0, every HARQ process busy
};

struct UeState {
  UeId id = 0;
  PriorityClass cls;
  Bytes allowance = 1;
  Bytes clamp_lo = -1;
  Bytes clamp_hi = 1;
  Bytes max_tbs = 1;
  Bytes credit = 0;
  Slot last_update_slot = 0;

  std::deque<std::int64_t> queue;  // packet ids, head first
  Bytes backlog = 0;

  ChannelModel channel;
  std::vector<HarqProcess> harq;
  int free_harq = 0;

  Membership membership = Membership::Idle;
  std::uint32_t generation = 0;

  bool backlogged() const { return backlog > 0; }
  bool has_free_harq() const { return free_harq > 0; }
  int cqi() const { return channel.cqi(); }

  int first_free_harq() const {
    for (const auto& p : harq)
      if (p.state == HarqState::Free) return p.pid;
    return -1;
  }
};

}  // namespace cbsnr
