// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cbsnr {

using Slot = std::int64_t;
using Bytes = std::int64_t;
using UeId = int;

inline constexpr Slot kNoSlot = -1;

/// Raised for malformed or inconsistent configuration input.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a run breaches one of the simulator's hard invariants.
class InvariantError : public std::runtime_error {
 public:
  InvariantError(Slot slot, const std::string& what)
      : std::runtime_error("slot " + std::to_string(slot) + ": " + what), slot_(slot) {}
  Slot slot() const { return slot_; }

 private:
  Slot slot_;
};

// ceil(a / b) for a >= 0, b > 0
constexpr std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

enum class PriorityId { P1 = 1, P2 = 2, P3 = 3 };

inline std::string to_string(PriorityId p) { return "p" + std::to_string(static_cast<int>(p)); }

inline PriorityId parse_priority(const std::string& s) {
  if (s == "p1") return PriorityId::P1;
  if (s == "p2") return PriorityId::P2;
  if (s == "p3") return PriorityId::P3;
  throw ConfigError("unknown priority class '" + s + "' (expected p1, p2 or p3)");
}

struct PriorityClass {
  PriorityId id = PriorityId::P1;
  double idle_slope_share = 1.0;  // fraction of the reference rate, (0,1]
  Bytes payload_bytes = 1;
};

enum class GateVariant { None, DT, PU };
enum class GateEngine { Naive, EventDriven };
enum class SchedulerKind { RR, PF, WPF };

inline std::string to_string(GateVariant v) {
  switch (v) {
    case GateVariant::DT: return "DT";
    case GateVariant::PU: return "PU";
    default: return "None";
  }
}
inline std::string to_string(GateEngine e) { return e == GateEngine::Naive ? "naive" : "event"; }
inline std::string to_string(SchedulerKind s) {
  switch (s) {
    case SchedulerKind::PF: return "PF";
    case SchedulerKind::WPF: return "WPF";
    default: return "RR";
  }
}

inline GateVariant parse_gate(const std::string& s) {
  if (s == "DT") return GateVariant::DT;
  if (s == "PU") return GateVariant::PU;
  if (s == "None" || s == "none") return GateVariant::None;
  throw ConfigError("gate: unknown variant '" + s + "' (expected DT, PU or None)");
}
inline GateEngine parse_engine(const std::string& s) {
  if (s == "naive" || s == "Naive") return GateEngine::Naive;
  if (s == "event" || s == "EventDriven") return GateEngine::EventDriven;
  throw ConfigError("engine: unknown engine '" + s + "' (expected naive or event)");
}
inline SchedulerKind parse_scheduler(const std::string& s) {
  if (s == "RR") return SchedulerKind::RR;
  if (s == "PF") return SchedulerKind::PF;
  if (s == "WPF") return SchedulerKind::WPF;
  throw ConfigError("scheduler: unknown scheduler '" + s + "' (expected RR, PF or WPF)");
}

}  // namespace cbsnr
