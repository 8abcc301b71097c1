// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "cbsnr/common.hpp"
#include "cbsnr/phy.hpp"

namespace cbsnr {

using json = nlohmann::json;

struct UeSpec {
  PriorityId cls = PriorityId::P1;
  int cqi = 15;
  // optional two-state channel; cqi is the good state
  bool markov = false;
  int cqi_bad = 1;
  double p_good_to_bad = 0.0;
  double p_bad_to_good = 0.0;
};

struct TrafficConfig {
  std::string mode = "rho";  // "rho": fit q to target_rho, "fixed": use q as given
  double q = 0.9;
  double mean_on_slots = 20.0;
  double mean_off_slots = 20.0;
  double target_rho = 1.0;
  bool scale_payload_on_overload = false;
  bool saturate = false;  // keep every queue non-empty (capacity measurements)
};

struct AllowanceConfig {
  std::string mode = "calibrated";  // "calibrated": shares of measured C_res, "fixed": shares of reference_rate
  double reference_rate_bytes_per_s = 0.0;
  bool split_class_share = true;  // divide a class share among the UEs of that class
  int clamp_burst_factor = 2;
};

struct SimConfig {
  std::string name = "run";
  std::map<PriorityId, PriorityClass> classes;
  std::vector<UeSpec> ues;
  double slot_ms = 1.0;
  Slot num_slots = 10000;
  Slot warmup_slots = 2000;
  int rb_budget = 52;
  int rbg_size = 1;
  int grant_cap = 2;
  GateVariant gate = GateVariant::DT;
  GateEngine engine = GateEngine::EventDriven;
  SchedulerKind scheduler = SchedulerKind::RR;
  bool gate_pf_hybrid = false;
  int n_harq = 8;
  int max_retx = 3;
  double bler_new = 0.1;
  double bler_retx = 0.01;
  int harq_rtt_slots = 4;
  std::string phy_table;  // empty: built-in default table
  double pf_beta = 0.01;
  TrafficConfig traffic;
  AllowanceConfig allowance;
  std::optional<int> e_max;
  std::uint64_t seed = 1;
  Slot calibration_slots = 5000;

  int num_ues() const { return static_cast<int>(ues.size()); }
};

inline std::map<PriorityId, PriorityClass> default_classes() {
  return {{PriorityId::P1, {PriorityId::P1, 0.75, 80}},
          {PriorityId::P2, {PriorityId::P2, 0.20, 160}},
          {PriorityId::P3, {PriorityId::P3, 0.05, 240}}};
}

namespace detail {

inline void reject_unknown(const json& j, const std::string& where, const std::set<std::string>& known) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key()))
      throw ConfigError("unknown key '" + where + it.key() + "'");
  }
}

template <typename T>
void read(const json& j, const std::string& key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("key '" + where + key + "' has the wrong type: " + j.at(key).dump());
  }
}

inline void require(bool ok, const std::string& key, const std::string& msg) {
  if (!ok) throw ConfigError("key '" + key + "': " + msg);
}

}  // namespace detail

inline void validate(const SimConfig& c) {
  using detail::require;
  require(!c.ues.empty(), "ues", "at least one UE is required");
  require(c.slot_ms > 0, "slot_ms", "must be positive");
  require(c.num_slots > 0, "num_slots", "must be positive");
  require(c.warmup_slots >= 0, "warmup_slots", "must be non-negative");
  require(c.rb_budget >= 1, "rb_budget", "must be >= 1");
  require(c.rbg_size >= 1 && c.rbg_size <= c.rb_budget, "rbg_size", "must be in [1, rb_budget]");
  require(c.grant_cap >= 1, "grant_cap", "must be >= 1");
  require(c.n_harq >= 1, "n_harq", "must be >= 1");
  require(c.max_retx >= 0, "max_retx", "must be >= 0");
  require(c.bler_new >= 0 && c.bler_new <= 1, "bler_new", "must be in [0,1]");
  require(c.bler_retx >= 0 && c.bler_retx <= 1, "bler_retx", "must be in [0,1]");
  require(c.harq_rtt_slots >= 1, "harq_rtt_slots", "must be >= 1");
  require(c.pf_beta > 0 && c.pf_beta <= 1, "pf_beta", "must be in (0,1]");
  require(c.calibration_slots > 0, "calibration_slots", "must be positive");
  double share_sum = 0.0;
  for (const auto& [id, cls] : c.classes) {
    const std::string k = "classes." + to_string(id);
    require(cls.idle_slope_share > 0 && cls.idle_slope_share <= 1, k + ".share", "must be in (0,1]");
    require(cls.payload_bytes > 0, k + ".payload_bytes", "must be positive");
    share_sum += cls.idle_slope_share;
  }
  require(share_sum <= 1.0 + 1e-9, "classes", "idle-slope shares sum to more than 1 (admission)");
  for (std::size_t i = 0; i < c.ues.size(); ++i) {
    const auto& u = c.ues[i];
    const std::string k = "ues[" + std::to_string(i) + "]";
    require(c.classes.count(u.cls) != 0, k + ".class", "class not defined in 'classes'");
    require(u.cqi >= 1 && u.cqi <= 15, k + ".cqi", "must be in [1,15]");
    if (u.markov) {
      require(u.cqi_bad >= 1 && u.cqi_bad <= 15, k + ".cqi_bad", "must be in [1,15]");
      require(u.p_good_to_bad >= 0 && u.p_good_to_bad <= 1, k + ".p_good_to_bad", "must be a probability");
      require(u.p_bad_to_good >= 0 && u.p_bad_to_good <= 1, k + ".p_bad_to_good", "must be a probability");
    }
  }
  const auto& t = c.traffic;
  require(t.mode == "rho" || t.mode == "fixed", "traffic.mode", "must be 'rho' or 'fixed'");
  require(t.q >= 0 && t.q <= 1, "traffic.q", "must be in [0,1]");
  require(t.mean_on_slots >= 0 && t.mean_off_slots >= 0, "traffic.mean_on_slots", "dwell means must be >= 0");
  require(t.mean_on_slots > 0 || t.mean_off_slots > 0, "traffic.mean_on_slots", "ON and OFF means cannot both be 0");
  const auto& a = c.allowance;
  require(a.mode == "calibrated" || a.mode == "fixed", "allowance.mode", "must be 'calibrated' or 'fixed'");
  if (a.mode == "fixed")
    require(a.reference_rate_bytes_per_s > 0, "allowance.reference_rate_bytes_per_s", "must be positive in fixed mode");
  require(a.clamp_burst_factor >= 1, "allowance.clamp_burst_factor", "must be >= 1");
  if (c.e_max) require(*c.e_max >= 0, "e_max", "must be >= 0");
  if (c.gate_pf_hybrid)
    require(c.gate != GateVariant::None && c.scheduler != SchedulerKind::RR, "gate_pf_hybrid",
            "needs a credit gate and a PF/WPF scheduler");
}

inline SimConfig config_from_json(const json& j) {
  using detail::read;
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  detail::reject_unknown(j, "", {"name", "classes", "ues", "ue_groups", "slot_ms", "num_slots", "warmup_slots",
                                 "rb_budget", "rbg_size", "grant_cap", "gate", "engine", "scheduler",
                                 "gate_pf_hybrid", "n_harq", "max_retx", "bler_new", "bler_retx",
                                 "harq_rtt_slots", "phy_table", "pf_beta", "traffic", "allowance", "e_max",
                                 "seed", "calibration_slots", "$schema", "schema_version"});
  SimConfig c;
  c.classes = default_classes();
  read(j, "name", c.name, "");
  if (j.contains("classes")) {
    const auto& jc = j.at("classes");
    if (!jc.is_object()) throw ConfigError("key 'classes' must be an object keyed by p1/p2/p3");
    c.classes.clear();  // a classes block replaces the defaults
    for (auto it = jc.begin(); it != jc.end(); ++it) {
      const PriorityId id = parse_priority(it.key());
      const std::string where = "classes." + it.key() + ".";
      detail::reject_unknown(it.value(), where, {"share", "payload_bytes"});
      PriorityClass cls{id, 0.0, 0};
      read(it.value(), "share", cls.idle_slope_share, where);
      read(it.value(), "payload_bytes", cls.payload_bytes, where);
      c.classes[id] = cls;
    }
  }
  auto parse_ue = [](const json& ju, const std::string& where) {
    detail::reject_unknown(ju, where, {"class", "cqi", "count", "markov", "cqi_bad", "p_good_to_bad", "p_bad_to_good"});
    UeSpec u;
    std::string cls = "p1";
    read(ju, "class", cls, where);
    u.cls = parse_priority(cls);
    read(ju, "cqi", u.cqi, where);
    read(ju, "markov", u.markov, where);
    read(ju, "cqi_bad", u.cqi_bad, where);
    read(ju, "p_good_to_bad", u.p_good_to_bad, where);
    read(ju, "p_bad_to_good", u.p_bad_to_good, where);
    return u;
  };
  if (j.contains("ues")) {
    const auto& ja = j.at("ues");
    if (!ja.is_array()) throw ConfigError("key 'ues' must be an array");
    for (std::size_t i = 0; i < ja.size(); ++i) c.ues.push_back(parse_ue(ja[i], "ues[" + std::to_string(i) + "]."));
  }
  if (j.contains("ue_groups")) {
    const auto& ja = j.at("ue_groups");
    if (!ja.is_array()) throw ConfigError("key 'ue_groups' must be an array");
    for (std::size_t i = 0; i < ja.size(); ++i) {
      const std::string where = "ue_groups[" + std::to_string(i) + "].";
      int count = 1;
      read(ja[i], "count", count, where);
      if (count < 0) throw ConfigError("key '" + where + "count' must be >= 0");
      const UeSpec u = parse_ue(ja[i], where);
      for (int k = 0; k < count; ++k) c.ues.push_back(u);
    }
  }
  read(j, "slot_ms", c.slot_ms, "");
  read(j, "num_slots", c.num_slots, "");
  read(j, "warmup_slots", c.warmup_slots, "");
  read(j, "rb_budget", c.rb_budget, "");
  read(j, "rbg_size", c.rbg_size, "");
  read(j, "grant_cap", c.grant_cap, "");
  std::string s;
  if (j.contains("gate")) { read(j, "gate", s, ""); c.gate = parse_gate(s); }
  if (j.contains("engine")) { read(j, "engine", s, ""); c.engine = parse_engine(s); }
  if (j.contains("scheduler")) { read(j, "scheduler", s, ""); c.scheduler = parse_scheduler(s); }
  read(j, "gate_pf_hybrid", c.gate_pf_hybrid, "");
  read(j, "n_harq", c.n_harq, "");
  read(j, "max_retx", c.max_retx, "");
  read(j, "bler_new", c.bler_new, "");
  read(j, "bler_retx", c.bler_retx, "");
  read(j, "harq_rtt_slots", c.harq_rtt_slots, "");
  read(j, "phy_table", c.phy_table, "");
  read(j, "pf_beta", c.pf_beta, "");
  if (j.contains("traffic")) {
    const auto& jt = j.at("traffic");
    detail::reject_unknown(jt, "traffic.", {"mode", "q", "mean_on_slots", "mean_off_slots", "target_rho",
                                            "scale_payload_on_overload", "saturate"});
    read(jt, "mode", c.traffic.mode, "traffic.");
    read(jt, "q", c.traffic.q, "traffic.");
    read(jt, "mean_on_slots", c.traffic.mean_on_slots, "traffic.");
    read(jt, "mean_off_slots", c.traffic.mean_off_slots, "traffic.");
    read(jt, "target_rho", c.traffic.target_rho, "traffic.");
    read(jt, "scale_payload_on_overload", c.traffic.scale_payload_on_overload, "traffic.");
    read(jt, "saturate", c.traffic.saturate, "traffic.");
  }
  if (j.contains("allowance")) {
    const auto& ja = j.at("allowance");
    detail::reject_unknown(ja, "allowance.", {"mode", "reference_rate_bytes_per_s", "split_class_share",
                                              "clamp_burst_factor"});
    read(ja, "mode", c.allowance.mode, "allowance.");
    read(ja, "reference_rate_bytes_per_s", c.allowance.reference_rate_bytes_per_s, "allowance.");
    read(ja, "split_class_share", c.allowance.split_class_share, "allowance.");
    read(ja, "clamp_burst_factor", c.allowance.clamp_burst_factor, "allowance.");
  }
  if (j.contains("e_max") && !j.at("e_max").is_null()) {
    int e = 0;
    read(j, "e_max", e, "");
    c.e_max = e;
  }
  read(j, "seed", c.seed, "");
  read(j, "calibration_slots", c.calibration_slots, "");
  validate(c);
  return c;
}

inline json config_to_json(const SimConfig& c) {
  json j;
  j["name"] = c.name;
  for (const auto& [id, cls] : c.classes)
    j["classes"][to_string(id)] = {{"share", cls.idle_slope_share}, {"payload_bytes", cls.payload_bytes}};
  j["ues"] = json::array();
  for (const auto& u : c.ues) {
    json ju = {{"class", to_string(u.cls)}, {"cqi", u.cqi}};
    if (u.markov) {
      ju["markov"] = true;
      ju["cqi_bad"] = u.cqi_bad;
      ju["p_good_to_bad"] = u.p_good_to_bad;
      ju["p_bad_to_good"] = u.p_bad_to_good;
    }
    j["ues"].push_back(ju);
  }
  j["slot_ms"] = c.slot_ms;
  j["num_slots"] = c.num_slots;
  j["warmup_slots"] = c.warmup_slots;
  j["rb_budget"] = c.rb_budget;
  j["rbg_size"] = c.rbg_size;
  j["grant_cap"] = c.grant_cap;
  j["gate"] = to_string(c.gate);
  j["engine"] = to_string(c.engine);
  j["scheduler"] = to_string(c.scheduler);
  j["gate_pf_hybrid"] = c.gate_pf_hybrid;
  j["n_harq"] = c.n_harq;
  j["max_retx"] = c.max_retx;
  j["bler_new"] = c.bler_new;
  j["bler_retx"] = c.bler_retx;
  j["harq_rtt_slots"] = c.harq_rtt_slots;
  j["phy_table"] = c.phy_table;
  j["pf_beta"] = c.pf_beta;
  j["traffic"] = {{"mode", c.traffic.mode},
                  {"q", c.traffic.q},
                  {"mean_on_slots", c.traffic.mean_on_slots},
                  {"mean_off_slots", c.traffic.mean_off_slots},
                  {"target_rho", c.traffic.target_rho},
                  {"scale_payload_on_overload", c.traffic.scale_payload_on_overload},
                  {"saturate", c.traffic.saturate}};
  j["allowance"] = {{"mode", c.allowance.mode},
                    {"reference_rate_bytes_per_s", c.allowance.reference_rate_bytes_per_s},
                    {"split_class_share", c.allowance.split_class_share},
                    {"clamp_burst_factor", c.allowance.clamp_burst_factor}};
  j["e_max"] = c.e_max ? json(*c.e_max) : json(nullptr);
  j["seed"] = c.seed;
  j["calibration_slots"] = c.calibration_slots;
  return j;
}

/// Short aliases accepted by `--set`.
inline std::string canonical_key(const std::string& key) {
  static const std::map<std::string, std::string> aliases = {
      {"rho", "traffic.target_rho"}, {"q", "traffic.q"}, {"K", "grant_cap"}, {"k", "grant_cap"},
      {"N", "num_slots"}};
  auto it = aliases.find(key);
  return it == aliases.end() ? key : it->second;
}

/// Applies a dotted-path override to a raw config document. The value is
/// parsed as JSON when possible, otherwise taken as a string.
inline void apply_override(json& doc, const std::string& key_in, const std::string& value) {
  const std::string key = canonical_key(key_in);
  json v;
  try {
    v = json::parse(value);
  } catch (const json::exception&) {
    v = value;
  }
  json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key_in + "' is malformed");
    if (dot == std::string::npos) {
      (*node)[part] = v;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

inline PhyTable load_phy_table(const SimConfig& c) {
  return c.phy_table.empty() ? PhyTable{} : PhyTable::load(c.phy_table);
}

}  // namespace cbsnr
